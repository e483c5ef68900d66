#include "ecpe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ecpe::checkpoint {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'C', 'P', 'E', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T take(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw Error("checkpoint truncated");
  return value;
}

}  // namespace

json to_json(const model::ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},
          {"word_hidden", c.word_hidden},
          {"attention_dim", c.attention_dim},
          {"clause_hidden", c.clause_hidden},
          {"pos_dim", c.pos_dim},
          {"pair_hidden", c.pair_hidden},
          {"pair_depth", c.pair_depth},
          {"clip_distance", c.clip_distance},
          {"use_positional", c.use_positional},
          {"variant", encoder::to_string(c.variant.variant)},
          {"gold_labels_at_test", c.variant.gold_labels_available},
          {"detach_signal", c.variant.detach_signal}};
}

model::ModelConfig model_config_from_json(const json& j) {
  model::ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.word_hidden = j.at("word_hidden").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.clause_hidden = j.at("clause_hidden").get<int>();
  c.pos_dim = j.at("pos_dim").get<int>();
  c.pair_hidden = j.at("pair_hidden").get<int>();
  c.pair_depth = j.at("pair_depth").get<int>();
  c.clip_distance = j.at("clip_distance").get<int>();
  c.use_positional = j.at("use_positional").get<bool>();
  c.variant.variant = encoder::parse_variant(j.at("variant").get<std::string>());
  c.variant.gold_labels_available = j.at("gold_labels_at_test").get<bool>();
  c.variant.detach_signal = j.at("detach_signal").get<bool>();
  return c;
}

void save(const std::filesystem::path& path, const model::Model& model, const corpus::Vocabulary& vocab,
          const json& metadata) {
  json header;
  header["version"] = kVersion;
  header["model_config"] = to_json(model.config());
  header["vocabulary"] = vocab.tokens();
  header["min_count"] = vocab.min_count();
  header["metadata"] = metadata;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& p : model.params().all()) {
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.value.size()) * sizeof(double);
  }
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params().all()) {
    out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error(path.string() + " is not an ecpe checkpoint");
  const auto version = take<std::uint32_t>(in);
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto length = take<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error("checkpoint truncated");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("bad checkpoint header: ") + e.what());
  }
  corpus::Vocabulary vocab(header.at("vocabulary").get<std::vector<std::string>>(), header.value("min_count", 1));
  model::Model model(model_config_from_json(header.at("model_config")), 0);

  if (header.at("tensors").size() != model.params().all().size()) {
    throw Error("checkpoint holds " + std::to_string(header.at("tensors").size()) + " tensors, model expects " +
                std::to_string(model.params().all().size()));
  }
  const auto payload_start = in.tellg();
  for (const auto& t : header.at("tensors")) {
    Parameter& p = model.params().get(t.at("name").get<std::string>());
    if (p.value.rows() != t.at("rows").get<Eigen::Index>() || p.value.cols() != t.at("cols").get<Eigen::Index>()) {
      throw Error("checkpoint tensor " + p.name + " has unexpected shape");
    }
    in.seekg(payload_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw Error("checkpoint truncated in tensor " + p.name);
  }
  return Checkpoint{std::move(model), std::move(vocab), header.value("metadata", json::object())};
}

}  // namespace ecpe::checkpoint
