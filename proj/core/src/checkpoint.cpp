#include "charnmt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "charnmt/errors.hpp"
#include "json.hpp"

namespace charnmt {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw config_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw config_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

std::string read_string(std::istream& is) {
  const std::uint64_t len = read_u64(is);
  std::string s(len, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(len))) {
    throw config_error("checkpoint: truncated string");
  }
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (std::int64_t d : t.shape) write_u64(os, static_cast<std::uint64_t>(d));
  for (double x : t.data) write_f64(os, x);
}

Tensor read_tensor(std::istream& is) {
  const std::uint32_t rank = read_u32(is);
  if (rank < 1 || rank > 3) throw config_error("checkpoint: bad tensor rank");
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::int64_t>(read_u64(is)));
  Tensor t(shape);
  for (double& x : t.data) x = read_f64(is);
  return t;
}

std::string config_json(const TrainConfig& c) {
  nlohmann::json j;
  j["variant"] = variant_name(c.variant);
  j["learning_rate"] = c.learning_rate;
  j["l2_lambda"] = c.l2_lambda;
  j["clip_threshold"] = c.clip_threshold;
  j["batch_budget"] = c.batch_budget;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["embed_size"] = c.embed_size;
  j["hidden_size"] = c.hidden_size;
  j["attn_size"] = c.attn_size;
  return j.dump();
}

TrainConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig c;
  c.variant = variant_from_name(j.at("variant").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.clip_threshold = j.at("clip_threshold").get<double>();
  c.batch_budget = j.at("batch_budget").get<std::int64_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.embed_size = j.at("embed_size").get<std::int64_t>();
  c.hidden_size = j.at("hidden_size").get<std::int64_t>();
  c.attn_size = j.at("attn_size").get<std::int64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const AdamState& adam,
                     const TrainConfig& train, int epochs_done) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw config_error("cannot write checkpoint: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_string(os, config_json(train));

  std::ostringstream src_dump, trg_dump;
  model.src_vocab.dump(src_dump);
  model.trg_vocab.dump(trg_dump);
  write_string(os, src_dump.str());
  write_string(os, trg_dump.str());

  write_u32(os, static_cast<std::uint32_t>(epochs_done));
  write_u64(os, static_cast<std::uint64_t>(adam.step));

  write_u32(os, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& name : model.params.names()) {
    write_string(os, name);
    write_tensor(os, model.params.at(name));
  }
  for (const Tensor& t : adam.m) write_tensor(os, t);
  for (const Tensor& t : adam.v) write_tensor(os, t);
  if (!os) throw config_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("cannot read checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw config_error("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw config_error("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint out;
  out.train = config_from_json(read_string(is));

  std::istringstream src_dump(read_string(is));
  std::istringstream trg_dump(read_string(is));
  Vocabulary src_vocab = Vocabulary::parse(src_dump);
  Vocabulary trg_vocab = Vocabulary::parse(trg_dump);

  out.epochs_done = static_cast<int>(read_u32(is));
  const std::int64_t adam_steps = static_cast<std::int64_t>(read_u64(is));

  ModelConfig mc;
  mc.variant = out.train.variant;
  mc.embed_size = out.train.embed_size;
  mc.hidden_size = out.train.hidden_size;
  mc.attn_size = out.train.attn_size;
  out.model = Model(mc, std::move(src_vocab), std::move(trg_vocab), out.train.seed);

  const std::uint32_t param_count = read_u32(is);
  if (param_count != out.model.params.size()) {
    throw config_error("checkpoint parameter count " + std::to_string(param_count) +
                       " does not match the model (" + std::to_string(out.model.params.size()) + ")");
  }
  for (const auto& expected : out.model.params.names()) {
    const std::string name = read_string(is);
    if (name != expected) {
      throw config_error("checkpoint parameter " + name + " does not match expected " + expected);
    }
    Tensor t = read_tensor(is);
    if (t.shape != out.model.params.at(name).shape) {
      throw config_error("checkpoint parameter " + name + " has wrong shape");
    }
    out.model.params.at(name) = std::move(t);
  }
  out.adam = AdamState::init(out.model.params);
  out.adam.step = adam_steps;
  for (Tensor& t : out.adam.m) t = read_tensor(is);
  for (Tensor& t : out.adam.v) t = read_tensor(is);
  return out;
}

}  // namespace charnmt
