#include "autoformal/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "autoformal/error.hpp"

namespace autoformal {
namespace {

using nlohmann::json;
constexpr const char* kMagic = "autoformal-checkpoint v1";

static_assert(std::numeric_limits<double>::is_iec559);

void write_double(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

bool read_double(std::istream& in, double& value) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  value = std::bit_cast<double>(bits);
  return true;
}

json hp_to_json(const HyperParams& hp) {
  json j;
  j["unit_type"] = to_string(hp.unit_type);
  j["attention"] = to_string(hp.attention);
  j["num_layers"] = hp.num_layers;
  j["residual"] = hp.residual;
  j["optimizer"] = to_string(hp.optimizer);
  j["encoder_type"] = to_string(hp.encoder_type);
  j["num_units"] = hp.num_units;
  j["dropout"] = hp.dropout;
  j["forget_bias"] = hp.forget_bias;
  j["learning_rate"] = hp.learning_rate ? json(*hp.learning_rate) : json(nullptr);
  j["batch_size"] = hp.batch_size;
  j["train_steps"] = hp.train_steps;
  j["seed"] = hp.seed;
  j["clip_norm"] = hp.clip_norm;
  j["max_src_len"] = hp.max_src_len;
  j["max_tgt_len"] = hp.max_tgt_len;
  return j;
}

HyperParams hp_from_json(const json& j) {
  HyperParams hp;
  hp.unit_type = parse_unit_type(j.at("unit_type").get<std::string>());
  hp.attention = parse_attention(j.at("attention").get<std::string>());
  hp.num_layers = j.at("num_layers").get<int>();
  hp.residual = j.at("residual").get<bool>();
  hp.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  hp.encoder_type = parse_encoder_type(j.at("encoder_type").get<std::string>());
  hp.num_units = j.at("num_units").get<int>();
  hp.dropout = j.at("dropout").get<double>();
  hp.forget_bias = j.at("forget_bias").get<double>();
  if (!j.at("learning_rate").is_null()) hp.learning_rate = j.at("learning_rate").get<double>();
  hp.batch_size = j.at("batch_size").get<int>();
  hp.train_steps = j.at("train_steps").get<int>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.clip_norm = j.at("clip_norm").get<double>();
  hp.max_src_len = j.at("max_src_len").get<int>();
  hp.max_tgt_len = j.at("max_tgt_len").get<int>();
  hp.validate();
  return hp;
}

[[noreturn]] void invalid(const std::string& path, const std::string& why) {
  throw Error(ErrorKind::InvalidCheckpoint, path + ": " + why);
}

}  // namespace

DecodeResult Model::translate(const lexing::TokenSequence& source) const {
  std::vector<int> ids = src_vocab.encode(source);
  if (static_cast<int>(ids.size()) > hp.max_src_len) ids.resize(static_cast<std::size_t>(hp.max_src_len));
  return greedy_decode(ids, hp, params, hp.max_tgt_len);
}

lexing::TokenSequence Model::translate_tokens(const lexing::TokenSequence& source) const {
  return tgt_vocab.decode(translate(source).ids, tgt_language);
}

void save_checkpoint(const std::string& path, const Model& model) {
  json header;
  header["hyperparams"] = hp_to_json(model.hp);
  header["src_vocab"] = model.src_vocab.tokens();
  header["tgt_vocab"] = model.tgt_vocab.tokens();
  header["src_language"] = lexing::to_string(model.src_language);
  header["tgt_language"] = lexing::to_string(model.tgt_language);
  header["step"] = model.step;
  json tensors = json::array();
  const auto named = model.params.tensors();
  for (const auto& t : named) {
    tensors.push_back({{"name", t.name}, {"rows", t.value->rows()}, {"cols", t.value->cols()}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp);
    out << kMagic << '\n' << text.size() << '\n' << text;
    for (const auto& t : named) {
      for (Eigen::Index i = 0; i < t.value->size(); ++i) {
        write_double(out, t.value->data()[i]);
      }
    }
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) invalid(path, "bad magic line");
  std::string len_line;
  std::getline(in, len_line);
  std::size_t len = 0;
  try {
    len = std::stoull(len_line);
  } catch (const std::exception&) {
    invalid(path, "bad header length");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) invalid(path, "truncated header");

  Model model;
  json header;
  try {
    header = json::parse(text);
    model.hp = hp_from_json(header.at("hyperparams"));
    model.src_vocab = corpus::Vocabulary::from_tokens(header.at("src_vocab").get<std::vector<std::string>>());
    model.tgt_vocab = corpus::Vocabulary::from_tokens(header.at("tgt_vocab").get<std::vector<std::string>>());
    model.src_language = lexing::parse_language(header.at("src_language").get<std::string>());
    model.tgt_language = lexing::parse_language(header.at("tgt_language").get<std::string>());
    model.step = header.at("step").get<std::int64_t>();
  } catch (const json::exception& e) {
    invalid(path, e.what());
  } catch (const Error& e) {
    invalid(path, e.what());
  }

  model.params = init_params(model.hp, model.src_vocab.size(), model.tgt_vocab.size());
  auto named = model.params.tensors();
  const json& listed = header.at("tensors");
  if (!listed.is_array() || listed.size() != named.size()) invalid(path, "tensor list does not match configuration");
  for (std::size_t k = 0; k < named.size(); ++k) {
    const json& t = listed[k];
    if (t.value("name", "") != named[k].name || t.value("rows", -1) != named[k].value->rows() ||
        t.value("cols", -1) != named[k].value->cols()) {
      invalid(path, "tensor " + named[k].name + " has unexpected name or shape");
    }
    Matrix& m = *named[k].value;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (!read_double(in, m.data()[i])) invalid(path, "truncated tensor data");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) invalid(path, "trailing bytes");
  return model;
}

}  // namespace autoformal
