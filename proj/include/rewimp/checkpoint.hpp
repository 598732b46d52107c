#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "rewimp/nn.hpp"

namespace rewimp {

// Shared JSON-lines checkpoint envelope: a header object on the first line,
// then one {"name", "shape", "data"} record per parameter tensor.

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& arr);

struct NamedTensorWriter {
  std::vector<nlohmann::json> lines;
  void add(const std::string& name, const Matrix& m);
  void add(const std::string& name, const Vector& v);
};

void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const NamedTensorWriter& tensors);

struct Checkpoint {
  nlohmann::json header;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix& tensor(const std::string& name) const;
  Vector vector_tensor(const std::string& name) const;
};

Checkpoint read_checkpoint(const std::string& path,
                           const std::string& expected_format);

nlohmann::json mlp_header_json(const MlpParams& params);
void add_mlp_tensors(NamedTensorWriter& w, const std::string& prefix,
                     const MlpParams& params);
MlpParams mlp_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix,
                              const std::vector<int>& layer_sizes);

}  // namespace rewimp
