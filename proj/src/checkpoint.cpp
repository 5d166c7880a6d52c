#include "qnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "qnn/error.hpp"

namespace qnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "qnn-checkpoint";
constexpr int kVersion = 1;

void put_le64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le64(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

fs::path save_checkpoint(Model& model, const TopologySpec& topology, const QuantSpec& quant,
                         const fs::path& stem) {
  fs::path json_path = stem;
  json_path += ".json";
  fs::path blob_path = stem;
  blob_path += ".bin";

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot write '" + blob_path.string() + "'");
  json index = json::array();
  std::size_t offset = 0;
  for (const StateEntry& e : model.state()) {
    index.push_back({{"name", e.name}, {"shape", e.tensor->shape()}, {"offset", offset},
                     {"count", e.tensor->size()}});
    for (double v : e.tensor->values()) put_le64(blob, v);
    offset += e.tensor->size();
  }
  blob.close();
  if (!blob) throw DataError("failed writing '" + blob_path.string() + "'");

  const json doc = {{"format", kFormat},
                    {"version", kVersion},
                    {"topology", topology},
                    {"quant", quant},
                    {"dtype", "float64-le"},
                    {"blob", blob_path.filename().string()},
                    {"total_values", offset},
                    {"tensors", index}};
  std::ofstream out(json_path);
  if (!out) throw DataError("cannot write '" + json_path.string() + "'");
  out << doc.dump(2) << '\n';
  return json_path;
}

LoadedCheckpoint load_checkpoint(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw DataError("cannot open '" + json_path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + json_path.string() + "': " + e.what());
  }
  if (doc.value("format", "") != kFormat || doc.value("version", 0) != kVersion)
    throw DataError("'" + json_path.string() + "' is not a version-1 qnn checkpoint");

  LoadedCheckpoint ck;
  from_json(doc.at("topology"), ck.topology);
  from_json(doc.at("quant"), ck.quant);
  ck.model = build_topology(ck.topology, ck.quant);

  const fs::path blob_path = json_path.parent_path() / doc.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot open '" + blob_path.string() + "'");
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(blob),
                                         std::istreambuf_iterator<char>()};
  const std::size_t total = doc.at("total_values").get<std::size_t>();
  if (bytes.size() != total * 8)
    throw DataError("'" + blob_path.string() + "': expected " + std::to_string(total * 8) +
                    " bytes, found " + std::to_string(bytes.size()));

  auto state = ck.model.state();
  const json& tensors = doc.at("tensors");
  if (tensors.size() != state.size())
    throw DataError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                    std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != state[i].name ||
        t.at("shape").get<Shape>() != state[i].tensor->shape())
      throw DataError("checkpoint tensor " + std::to_string(i) + " ('" +
                      t.at("name").get<std::string>() + "') does not match model tensor '" +
                      state[i].name + "'");
    const std::size_t offset = t.at("offset").get<std::size_t>();
    const std::size_t count = t.at("count").get<std::size_t>();
    if (count != state[i].tensor->size() || offset + count > total)
      throw DataError("checkpoint tensor '" + state[i].name + "' has an invalid extent");
    for (std::size_t k = 0; k < count; ++k)
      (*state[i].tensor)[k] = get_le64(bytes.data() + (offset + k) * 8);
  }
  return ck;
}

}  // namespace qnn
