#include "bioir/params_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bioir {

void ParamsFile::put(const std::string& name, Tensor value) {
  tensors.insert_or_assign(name, std::move(value));
}

const Tensor& ParamsFile::at(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw std::runtime_error("ParamsFile: missing tensor '" + name + "'");
  }
  return it->second;
}

void ParamsFile::save(const std::string& path) const {
  nlohmann::json root;
  root["format"] = "bioir-params";
  root["version"] = 1;
  root["metadata"] = metadata;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, tensor] : tensors) {  // std::map: sorted, stable output
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape();
    entry["values"] = std::vector<double>(tensor.flat().begin(), tensor.flat().end());
    list.push_back(std::move(entry));
  }
  root["tensors"] = std::move(list);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ParamsFile::save: cannot open " + path);
  out << root.dump(2) << '\n';
}

ParamsFile ParamsFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ParamsFile::load: cannot open " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("ParamsFile::load: invalid JSON in " + path + ": " + e.what());
  }
  if (root.value("format", "") != "bioir-params" || root.value("version", 0) != 1) {
    throw std::runtime_error("ParamsFile::load: " + path +
                             " is not a version-1 bioir-params file");
  }
  ParamsFile file;
  if (root.contains("metadata")) {
    file.metadata = root.at("metadata").get<std::map<std::string, std::string>>();
  }
  for (const auto& entry : root.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto values = entry.at("values").get<std::vector<double>>();
    file.tensors.emplace(name, Tensor(shape, values));
  }
  return file;
}

void export_parameters(std::span<Parameter* const> params, ParamsFile& file) {
  for (const Parameter* p : params) file.put(p->name, p->value);
}

void import_parameters(const ParamsFile& file, std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    const Tensor& stored = file.at(p->name);
    if (!stored.same_shape(p->value)) {
      throw std::runtime_error("import_parameters: tensor '" + p->name + "' has shape " +
                               stored.shape_string() + ", expected " + p->value.shape_string());
    }
    p->value = stored;
    p->zero_grad();
  }
}

}  // namespace bioir
