#include "rewimp/checkpoint.hpp"

#include <fstream>

#include "rewimp/error.hpp"

namespace rewimp {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

void NamedTensorWriter::add(const std::string& name, const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  lines.push_back(
      {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", data}});
}

void NamedTensorWriter::add(const std::string& name, const Vector& v) {
  lines.push_back({{"name", name},
                   {"shape", {v.size()}},
                   {"data", vector_to_json(v)}});
}

void write_checkpoint(const std::string& path, const json& header,
                      const NamedTensorWriter& tensors) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "write_checkpoint: cannot open " + path);
  out << header.dump() << "\n";
  for (const json& line : tensors.lines) out << line.dump() << "\n";
  if (!out) fail(ErrorKind::io, "write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path,
                           const std::string& expected_format) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "read_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::parse, "read_checkpoint: empty file " + path);
  }
  Checkpoint ckpt;
  try {
    ckpt.header = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse,
         "read_checkpoint: bad header: " + std::string(e.what()));
  }
  if (ckpt.header.value("format", "") != expected_format) {
    fail(ErrorKind::parse, "read_checkpoint: expected format '" +
                               expected_format + "' in " + path);
  }
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, "read_checkpoint: tensor record " +
                                 std::to_string(index) + ": " + e.what());
    }
    const auto& shape = rec.at("shape");
    const auto& data = rec.at("data");
    Eigen::Index rows, cols;
    if (shape.size() == 2) {
      rows = shape[0].get<Eigen::Index>();
      cols = shape[1].get<Eigen::Index>();
    } else {
      rows = shape[0].get<Eigen::Index>();
      cols = 1;
    }
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      fail(ErrorKind::parse, "read_checkpoint: tensor '" +
                                 rec.at("name").get<std::string>() +
                                 "' data length does not match shape");
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    }
    ckpt.tensors.emplace_back(rec.at("name").get<std::string>(), std::move(m));
    ++index;
  }
  return ckpt;
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  fail(ErrorKind::parse, "checkpoint: missing tensor '" + name + "'");
}

Vector Checkpoint::vector_tensor(const std::string& name) const {
  const Matrix& m = tensor(name);
  Vector v(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[r] = m(r, 0);
  return v;
}

json mlp_header_json(const MlpParams& params) {
  return json(params.layer_sizes);
}

void add_mlp_tensors(NamedTensorWriter& w, const std::string& prefix,
                     const MlpParams& params) {
  for (int l = 0; l < params.num_layers(); ++l) {
    w.add(prefix + ".w" + std::to_string(l), params.weights[l]);
    w.add(prefix + ".b" + std::to_string(l), params.biases[l]);
  }
}

MlpParams mlp_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix,
                              const std::vector<int>& layer_sizes) {
  MlpParams params;
  params.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Matrix& w = ckpt.tensor(prefix + ".w" + std::to_string(l));
    if (w.rows() != layer_sizes[l + 1] || w.cols() != layer_sizes[l]) {
      fail(ErrorKind::validation, "checkpoint: tensor shape mismatch for " +
                                      prefix + ".w" + std::to_string(l));
    }
    params.weights.push_back(w);
    params.biases.push_back(
        ckpt.vector_tensor(prefix + ".b" + std::to_string(l)));
  }
  return params;
}

}  // namespace rewimp
