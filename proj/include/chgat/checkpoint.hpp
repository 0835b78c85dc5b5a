#pragma once

// Single-file checkpoint archive.
//
//   magic "CHGATCK1"
//   u32 entry count
//   per entry: u32 name length, name, u64 payload length, payload
//
// Entries: "config" (key = value text), "vocab/<kind>" (UTF-8 token per
// line), "chars.tsv" (the character table), and "param/<name>" (u32 rank,
// u32 dims..., little-endian float32 values). Integers are little-endian.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chgat/char_knowledge.hpp"
#include "chgat/config.hpp"
#include "chgat/error.hpp"
#include "chgat/model.hpp"

namespace chgat {

namespace checkpoint_detail {

inline constexpr std::string_view kMagic = "CHGATCK1";

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint64_t uint(std::size_t bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw CheckpointError("truncated archive");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string join_lines(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t + "\n";
  return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

inline std::string encode_param(const ad::Var& v) {
  std::string out;
  put_u32(out, 2);
  put_u32(out, static_cast<std::uint32_t>(v.rows()));
  put_u32(out, static_cast<std::uint32_t>(v.cols()));
  for (double x : v.value()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

inline void decode_param(std::string_view payload, ad::Var& v, const std::string& name) {
  Reader r(payload);
  const auto rank = r.uint(4);
  if (rank != 2) throw CheckpointError(name + ": expected rank 2, got " + std::to_string(rank));
  const auto rows = r.uint(4), cols = r.uint(4);
  if (rows != v.rows() || cols != v.cols()) {
    throw CheckpointError(name + ": shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " does not match config shape " + std::to_string(v.rows()) + "x" +
                          std::to_string(v.cols()));
  }
  auto& values = v.mutable_value();
  for (auto& x : values) x = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4))));
  if (!r.done()) throw CheckpointError(name + ": trailing bytes");
}

}  // namespace checkpoint_detail

inline std::string model_config_text(const ModelConfig& c, VariantKind variant, std::uint64_t seed,
                                     std::size_t positions) {
  KeyValueConfig kv;
  kv.set("dim", std::to_string(c.dim));
  kv.set("heads", std::to_string(c.heads));
  kv.set("encoder_layers", std::to_string(c.encoder_layers));
  kv.set("text_layers", std::to_string(c.text_layers));
  kv.set("max_name_len", std::to_string(c.max_name_len));
  kv.set("dropout", format_double(c.dropout));
  kv.set("neighbor_cap", std::to_string(c.neighbor_cap));
  kv.set("variant", to_string(variant));
  kv.set("seed", std::to_string(seed));
  kv.set("positions", std::to_string(positions));
  return kv.to_text();
}

inline std::string serialize_checkpoint(const ChgatModel& model) {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("config", model_config_text(model.config(), model.variant(), model.seed(), model.vocab().positions));
  entries.emplace_back("vocab/chars", checkpoint_detail::join_lines(model.vocab().chars.tokens()));
  entries.emplace_back("vocab/semantic", checkpoint_detail::join_lines(model.vocab().semantic.tokens()));
  entries.emplace_back("vocab/phonetic", checkpoint_detail::join_lines(model.vocab().phonetic.tokens()));
  entries.emplace_back("vocab/syllables", checkpoint_detail::join_lines(model.vocab().syllables.tokens()));
  entries.emplace_back("chars.tsv", to_tsv(model.graphs().table()));
  for (const auto& e : model.parameters().entries()) {
    entries.emplace_back("param/" + e.name, checkpoint_detail::encode_param(e.var));
  }
  std::string out(checkpoint_detail::kMagic);
  checkpoint_detail::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, payload] : entries) {
    checkpoint_detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    checkpoint_detail::put_u64(out, payload.size());
    out += payload;
  }
  return out;
}

inline bool looks_like_checkpoint(std::string_view data) { return data.substr(0, 8) == checkpoint_detail::kMagic; }

inline ChgatModel deserialize_checkpoint(std::string_view data) {
  using namespace checkpoint_detail;
  if (!looks_like_checkpoint(data)) throw CheckpointError("bad magic");
  Reader r(data.substr(kMagic.size()));
  const auto count = r.uint(4);
  std::map<std::string, std::string_view> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.uint(4);
    std::string name(r.bytes(name_len));
    const auto len = r.uint(8);
    if (!entries.emplace(name, r.bytes(len)).second) throw CheckpointError("duplicate entry " + name);
  }
  if (!r.done()) throw CheckpointError("trailing bytes after entries");
  auto entry = [&](const std::string& name) {
    auto it = entries.find(name);
    if (it == entries.end()) throw CheckpointError("missing entry " + name);
    return it->second;
  };

  const auto kv = KeyValueConfig::parse(entry("config"));
  ModelConfig config;
  config.dim = kv.get_size("dim");
  config.heads = kv.get_size("heads");
  config.encoder_layers = kv.get_size("encoder_layers");
  config.text_layers = kv.get_size("text_layers");
  config.max_name_len = kv.get_size("max_name_len");
  config.dropout = kv.get_double("dropout");
  config.neighbor_cap = kv.get_size("neighbor_cap");
  const auto variant = parse_variant(kv.get("variant"));
  const auto seed = static_cast<std::uint64_t>(std::stoull(kv.get("seed")));

  ModelVocab vocab;
  vocab.chars = Vocabulary::from_manifest(split_lines(entry("vocab/chars")));
  vocab.semantic = Vocabulary::from_manifest(split_lines(entry("vocab/semantic")));
  vocab.phonetic = Vocabulary::from_manifest(split_lines(entry("vocab/phonetic")));
  vocab.syllables = Vocabulary::from_manifest(split_lines(entry("vocab/syllables")));
  vocab.positions = kv.get_size("positions");

  CharacterTable table;
  try {
    table = parse_character_table(entry("chars.tsv"));
  } catch (const Error& e) {
    throw CheckpointError(std::string("embedded character table: ") + e.what());
  }

  auto model = ChgatModel::uninitialized(config, variant, std::move(table), std::move(vocab), seed);
  std::size_t params_seen = 0;
  for (const auto& [name, payload] : entries) {
    if (name.rfind("param/", 0) != 0) continue;
    const std::string pname = name.substr(6);
    if (!model.parameters().contains(pname)) throw CheckpointError("unexpected parameter " + pname);
    auto v = model.parameters().get(pname);
    decode_param(payload, v, pname);
    ++params_seen;
  }
  if (params_seen != model.parameters().group_count()) {
    throw CheckpointError("expected " + std::to_string(model.parameters().group_count()) + " parameter groups, found " +
                          std::to_string(params_seen));
  }
  return model;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissing(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline void save_checkpoint(const std::string& path, const ChgatModel& model) {
  write_file(path, serialize_checkpoint(model));
}

inline ChgatModel load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace chgat
