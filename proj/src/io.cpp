#include "extremity/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace extremity {

using nlohmann::json;

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad number: '" + std::string(s) + "'");
  return x;
}

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

long parse_long(const std::string& s) {
  long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer: '" + s + "'");
  return x;
}

uint64_t parse_u64(const std::string& s) {
  uint64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad seed: '" + s + "'");
  return x;
}

bool parse_flag(const std::string& s) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw std::invalid_argument("bad flag value: '" + s + "' (want on/off)");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "dims") cfg.n_dims = static_cast<int>(parse_long(value));
  else if (key == "receiver") cfg.receiver_kind = parse_receiver_kind(value);
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_long(value));
  else if (key == "learning_rate") cfg.learning_rate = parse_double(value);
  else if (key == "minibatches") cfg.num_minibatches = static_cast<int>(parse_long(value));
  else if (key == "trials") cfg.num_trials = static_cast<int>(parse_long(value));
  else if (key == "eval_games") cfg.eval_games = static_cast<int>(parse_long(value));
  else if (key == "seed") cfg.seed = parse_u64(value);
  else if (key == "baseline") cfg.baseline_enabled = parse_flag(value);
  else if (key == "rolling_window") cfg.rolling_window = static_cast<int>(parse_long(value));
  else if (key == "eval_mode") cfg.eval_mode = parse_eval_mode(value);
  else if (key == "eval_batch_stats") cfg.eval_batch_stats = parse_flag(value);
  else throw std::invalid_argument("unknown config key: '" + key + "'");
}

TrainConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_config_kv(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

void write_train_log_csv(const std::filesystem::path& path, const TrialResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,batch_accuracy,rolling_accuracy,mean_reward\n";
  for (size_t i = 0; i < result.batch_accuracy.size(); ++i) {
    out << (i + 1) << ',' << fmt_double(result.batch_accuracy[i]) << ',' << fmt_double(result.rolling_accuracy[i])
        << ',' << fmt_double(result.batch_accuracy[i]) << '\n';
  }
}

namespace {

constexpr const char* kEvalHeader =
    "game,n_dims,target_index,signature,canonical_dim,canonical_pol,ms,mp,attention_dim,choice,correct,"
    "context_degrees";

std::string signature_field(const std::vector<DimPol>& sig) {
  std::string s;
  for (size_t i = 0; i < sig.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(sig[i].dim);
    s += to_string(sig[i].pol);
  }
  return s;
}

std::vector<DimPol> parse_signature_field(const std::string& s) {
  std::vector<DimPol> sig;
  if (s.empty()) return sig;
  for (const auto& entry : split(s, ';')) {
    size_t i = 0;
    while (i < entry.size() && std::isdigit(static_cast<unsigned char>(entry[i]))) ++i;
    if (i == 0 || i == entry.size()) throw std::invalid_argument("bad signature entry: '" + entry + "'");
    sig.push_back({static_cast<int>(parse_long(entry.substr(0, i))), parse_polarity(entry.substr(i))});
  }
  return sig;
}

}  // namespace

void write_eval_records_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kEvalHeader << '\n';
  for (const auto& r : records) {
    out << r.game << ',' << r.n_dims << ',' << r.target_index << ',' << signature_field(r.signature) << ','
        << r.canonical.dim << ',' << to_string(r.canonical.pol) << ',' << r.ms << ',' << r.mp << ',';
    if (r.attention_dim) out << *r.attention_dim;
    out << ',' << r.choice << ',' << (r.correct ? 1 : 0) << ',';
    for (size_t i = 0; i < r.context_degrees.size(); ++i) {
      if (i) out << ';';
      out << fmt_double(r.context_degrees[i]);
    }
    out << '\n';
  }
}

std::vector<EvalRecord> read_eval_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEvalHeader)
    throw std::invalid_argument(path.string() + ": schema mismatch, unexpected header '" + line + "'");

  std::vector<EvalRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12)
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected 12 fields");
    EvalRecord r;
    r.game = parse_long(f[0]);
    r.n_dims = static_cast<int>(parse_long(f[1]));
    r.target_index = static_cast<int>(parse_long(f[2]));
    r.signature = parse_signature_field(f[3]);
    r.canonical = {static_cast<int>(parse_long(f[4])), parse_polarity(f[5])};
    r.ms = static_cast<int>(parse_long(f[6]));
    r.mp = static_cast<int>(parse_long(f[7]));
    if (!f[8].empty()) r.attention_dim = static_cast<int>(parse_long(f[8]));
    r.choice = static_cast<int>(parse_long(f[9]));
    r.correct = parse_long(f[10]) != 0;
    if (!f[11].empty())
      for (const auto& d : split(f[11], ';')) r.context_degrees.push_back(parse_double(d));
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

constexpr char kCheckpointMagic[8] = {'X', 'G', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::string& out, uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct ByteReader {
  const std::string& data;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > data.size()) throw std::runtime_error("checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return x;
  }
  uint64_t u64() {
    need(8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return x;
  }
  double f64() {
    const uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

json architecture_header(Agents& agents) {
  json header;
  header["format"] = 1;
  header["n_dims"] = agents.sender.n_dims();
  header["receiver"] = to_string(receiver_kind(agents.receiver));
  header["sender_hidden"] = {agents.sender.h1.out(), agents.sender.h2.out()};
  if (auto* basic = std::get_if<BasicReceiverNet>(&agents.receiver)) {
    header["receiver_hidden"] = {basic->l1.out(), basic->l2.out(), basic->l3.out()};
  } else {
    auto& attn = std::get<AttentionalReceiverNet>(agents.receiver);
    header["receiver_hidden"] = {attn.s1_hidden.out(), attn.s2_hidden1.out(), attn.s2_hidden2.out()};
  }
  return header;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Agents& agents) {
  std::string blob(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::string header = architecture_header(agents).dump();
  put_u32(blob, static_cast<uint32_t>(header.size()));
  blob += header;

  std::vector<TensorRef> tensors = agents.sender.state_tensors();
  for (auto& t : receiver_state_tensors(agents.receiver)) tensors.push_back(t);
  put_u32(blob, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(blob, static_cast<uint32_t>(t.name.size()));
    blob += t.name;
    put_u64(blob, t.data->size());
    for (double d : *t.data) put_f64(blob, d);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Agents load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  ByteReader r{data};
  if (r.bytes(8) != std::string(kCheckpointMagic, 8)) throw std::runtime_error(path.string() + ": not a checkpoint");
  const json header = json::parse(r.bytes(r.u32()));
  const int n_dims = header.at("n_dims").get<int>();
  const ReceiverKind kind = parse_receiver_kind(header.at("receiver").get<std::string>());
  const auto sh = header.at("sender_hidden").get<std::vector<int>>();
  const auto rh = header.at("receiver_hidden").get<std::vector<int>>();
  if (sh.size() != 2 || rh.size() != 3) throw std::runtime_error(path.string() + ": bad architecture header");

  Rng scratch(0);  // all tensors are overwritten below
  Agents agents{SenderNet(n_dims, scratch, sh[0], sh[1]),
                kind == ReceiverKind::kBasic
                    ? ReceiverNet{std::in_place_type<BasicReceiverNet>, n_dims, scratch, rh[0], rh[1], rh[2]}
                    : ReceiverNet{std::in_place_type<AttentionalReceiverNet>, n_dims, scratch, rh[0], rh[1], rh[2]}};

  std::vector<TensorRef> tensors = agents.sender.state_tensors();
  for (auto& t : receiver_state_tensors(agents.receiver)) tensors.push_back(t);

  const uint32_t n_sections = r.u32();
  if (n_sections != tensors.size()) throw std::runtime_error(path.string() + ": section count mismatch");
  for (uint32_t s = 0; s < n_sections; ++s) {
    const std::string name = r.bytes(r.u32());
    const uint64_t count = r.u64();
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const TensorRef& t) { return t.name == name; });
    if (it == tensors.end()) throw std::runtime_error(path.string() + ": unknown section '" + name + "'");
    if (it->data->size() != count) throw std::runtime_error(path.string() + ": size mismatch in '" + name + "'");
    for (uint64_t i = 0; i < count; ++i) (*it->data)[i] = r.f64();
  }
  return agents;
}

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex_of_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data.data(), data.size())));
  return buf;
}

std::string iso8601_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

OutputFileEntry checksum_output(const std::filesystem::path& base_dir, const std::string& rel_path) {
  OutputFileEntry e;
  e.path = rel_path;
  e.bytes = std::filesystem::file_size(base_dir / rel_path);
  e.fnv1a64 = fnv1a64_hex_of_file(base_dir / rel_path);
  return e;
}

namespace {

json config_json(const TrainConfig& cfg) {
  return json{{"dims", cfg.n_dims},
              {"receiver", to_string(cfg.receiver_kind)},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"minibatches", cfg.resolved_minibatches()},
              {"trials", cfg.num_trials},
              {"eval_games", cfg.eval_games},
              {"seed", cfg.seed},
              {"baseline", cfg.baseline_enabled},
              {"rolling_window", cfg.rolling_window},
              {"eval_mode", to_string(cfg.eval_mode)},
              {"eval_batch_stats", cfg.eval_batch_stats}};
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["build_id"] = manifest.build_id;
  j["created"] = manifest.created;
  j["finished"] = manifest.finished;
  j["config"] = config_json(manifest.config);
  j["trial_seeds"] = manifest.trial_seeds;
  j["outputs"] = json::array();
  for (const auto& o : manifest.outputs) {
    j["outputs"].push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace extremity
