#include <fstream>
#include <map>

#include <json.hpp>

#include "pcgnet/checkpoint.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::ad {

using nlohmann::json;

const Parameter* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<ParamPtr>& params,
                     const std::string& metadata_json) {
  json entries = json::array();
  std::size_t offset = 0;
  for (const auto& p : params) {
    entries.push_back({{"name", p->name},
                       {"shape", p->shape},
                       {"trainable", p->trainable},
                       {"offset", offset},
                       {"count", p->value.size()}});
    offset += p->value.size();
  }
  json manifest = {{"format", "pcgnet-checkpoint"},
                   {"version", 1},
                   {"dtype", "float32"},
                   {"entries", entries},
                   {"metadata", json::parse(metadata_json)}};

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("save_checkpoint: cannot open " + tmp.string());
    os << manifest.dump() << '\n';
    for (const auto& p : params) {
      std::vector<float> payload(p->value.begin(), p->value.end());
      os.write(reinterpret_cast<const char*>(payload.data()),
               static_cast<std::streamsize>(payload.size() * sizeof(float)));
    }
    if (!os) throw InputError("save_checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("read_checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw InputError("read_checkpoint: empty file " + path.string());
  Checkpoint ckpt;
  try {
    const json manifest = json::parse(line);
    if (manifest.at("format") != "pcgnet-checkpoint")
      throw InputError("read_checkpoint: " + path.string() + " is not a pcgnet checkpoint");
    ckpt.metadata_json = manifest.value("metadata", json::object()).dump();
    for (const auto& e : manifest.at("entries")) {
      Parameter p;
      p.name = e.at("name").get<std::string>();
      p.shape = e.at("shape").get<Shape>();
      p.trainable = e.at("trainable").get<bool>();
      const auto count = e.at("count").get<std::size_t>();
      if (count != numel(p.shape))
        throw InputError("read_checkpoint: entry '" + p.name + "' count disagrees with its shape");
      std::vector<float> payload(count);
      is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(float)));
      if (is.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw InputError("read_checkpoint: truncated payload at '" + p.name + "'");
      p.value.assign(payload.begin(), payload.end());
      p.grad.assign(count, 0.0);
      ckpt.params.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw InputError("read_checkpoint: malformed manifest in " + path.string() + ": " + e.what());
  }
  return ckpt;
}

std::vector<std::string> load_parameters(const Checkpoint& ckpt, const std::vector<ParamPtr>& targets,
                                         const std::vector<std::string>* allowlist) {
  auto allowed = [&](const std::string& name) {
    if (allowlist == nullptr) return true;
    for (const auto& prefix : *allowlist)
      if (name.rfind(prefix, 0) == 0) return true;
    return false;
  };

  std::vector<std::string> loaded;
  for (const auto& target : targets) {
    if (!allowed(target->name)) continue;
    const Parameter* src = ckpt.find(target->name);
    if (src == nullptr)
      throw ValidationError("checkpoint has no parameter '" + target->name + "'");
    if (src->shape != target->shape)
      throw ValidationError("parameter '" + target->name + "' has shape " + shape_str(src->shape) +
                            " in the checkpoint but " + shape_str(target->shape) + " in the model");
    loaded.push_back(target->name);
  }
  if (allowlist == nullptr && ckpt.params.size() != targets.size()) {
    std::map<std::string, bool> known;
    for (const auto& t : targets) known[t->name] = true;
    for (const auto& p : ckpt.params)
      if (!known.count(p.name)) throw ValidationError("checkpoint holds unexpected parameter '" + p.name + "'");
  }
  // Validate everything before mutating anything.
  for (const auto& target : targets) {
    if (!allowed(target->name)) continue;
    target->value = ckpt.find(target->name)->value;
  }
  return loaded;
}

}  // namespace pcgnet::ad
