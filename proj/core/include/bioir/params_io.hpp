#pragma once

#include <map>
#include <span>
#include <string>

#include "bioir/tensor.hpp"

namespace bioir {

/// Named-tensor parameter file shared by all models (versioned JSON).
struct ParamsFile {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> metadata;

  void put(const std::string& name, Tensor value);
  bool has(const std::string& name) const { return tensors.count(name) != 0; }
  const Tensor& at(const std::string& name) const;  // throws naming the tensor

  void save(const std::string& path) const;
  static ParamsFile load(const std::string& path);
};

/// Copies parameter values into the file under their names.
void export_parameters(std::span<Parameter* const> params, ParamsFile& file);

/// Loads values by name into the parameters; throws std::runtime_error on a
/// missing name or shape mismatch (naming the tensor).
void import_parameters(const ParamsFile& file, std::span<Parameter* const> params);

}  // namespace bioir
