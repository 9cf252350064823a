#include "carca/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "carca/data/text_io.hpp"
#include "carca/error.hpp"

namespace carca::cli {
namespace {

namespace pt = boost::property_tree;

static_assert(std::is_same_v<std::uint64_t, unsigned long> && std::is_same_v<std::size_t, unsigned long>,
              "seed fields are read through the size_t overload");

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"name", "interactions", "attributes", "output_dir", "use_attributes", "use_context",
                "min_history"}},
      {"model", {"preset", "d", "g", "heads", "blocks", "max_len", "dropout", "l2_weight", "lr",
                 "residual", "scoring", "positional", "layout", "ca_residual", "leaky_slope",
                 "output_blocks", "target_mode", "ablation"}},
      {"train", {"epochs", "batch_size", "seed", "patience", "eval_every", "val_negatives", "k",
                 "val_seed"}},
      {"eval", {"protocol", "k", "negatives", "seeds", "scorer", "checkpoint"}},
      {"ablation", {"ids", "feature_grid"}},
      {"bench", {"batch_size", "warmup", "iterations"}},
  };
  return keys;
}

std::string where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return nullptr;
    const auto it = sec->find(key);
    if (it == sec->not_found()) return nullptr;
    return &it->second.data();
  }

  void get(const std::string& s, const std::string& k, std::string& out) const {
    if (const auto* v = raw(s, k)) out = *v;
  }

  void get(const std::string& s, const std::string& k, std::size_t& out) const {
    if (const auto* v = raw(s, k)) {
      const auto n = data::parse_integer(*v);
      if (!n || *n < 0) throw ConfigError(where(s, k) + ": expected a non-negative integer, got '" + *v + "'");
      out = static_cast<std::size_t>(*n);
    }
  }

  void get(const std::string& s, const std::string& k, int& out) const {
    if (const auto* v = raw(s, k)) {
      const auto n = data::parse_integer(*v);
      if (!n) throw ConfigError(where(s, k) + ": expected an integer, got '" + *v + "'");
      out = static_cast<int>(*n);
    }
  }

  void get(const std::string& s, const std::string& k, double& out) const {
    if (const auto* v = raw(s, k)) {
      const auto x = data::parse_real(*v);
      if (!x) throw ConfigError(where(s, k) + ": expected a number, got '" + *v + "'");
      out = *x;
    }
  }

  void get(const std::string& s, const std::string& k, bool& out) const {
    if (const auto* v = raw(s, k)) {
      if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "no" || *v == "off" || *v == "0") {
        out = false;
      } else {
        throw ConfigError(where(s, k) + ": expected true or false, got '" + *v + "'");
      }
    }
  }

  void get(const std::string& s, const std::string& k, std::filesystem::path& out) const {
    if (const auto* v = raw(s, k)) {
      out = *v;
      if (!out.empty() && out.is_relative() && !base_.empty()) out = base_ / out;
    }
  }

  template <typename T>
  void get_list(const std::string& s, const std::string& k, std::vector<T>& out) const {
    const auto* v = raw(s, k);
    if (!v) return;
    out.clear();
    for (const auto& part : data::split(*v, ',')) {
      const auto n = data::parse_integer(part);
      if (!n || *n < 0) throw ConfigError(where(s, k) + ": bad list entry '" + std::string(part) + "'");
      out.push_back(static_cast<T>(*n));
    }
  }

  template <typename Parse, typename E>
  void get_enum(const std::string& s, const std::string& k, E& out, Parse parse) const {
    if (const auto* v = raw(s, k)) out = parse(*v);
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;
};

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

evaluation::Protocol EvalSection::to_protocol() const {
  evaluation::Protocol p;
  p.kind = protocol;
  p.k = k;
  p.negatives = negatives;
  p.seeds = seeds;
  return p;
}

model::HyperParams RunConfig::effective_model() const { return model::apply_ablation(model, ablation); }

std::filesystem::path RunConfig::checkpoint_path() const {
  return eval.checkpoint.empty() ? data.output_dir / "checkpoint.bin" : eval.checkpoint;
}

void RunConfig::validate() const {
  effective_model().validate();
  train.validate();
  if (eval.k == 0) throw ConfigError("[eval] k must be positive");
  if (eval.negatives == 0) throw ConfigError("[eval] negatives must be positive");
  if (eval.seeds.empty()) throw ConfigError("[eval] seeds must list at least one seed");
  if (eval.scorer != "carca" && eval.scorer != "toppop" && eval.scorer != "random") {
    throw ConfigError("[eval] scorer must be carca, toppop or random");
  }
  for (int id : sweep.ids) {
    if (id < 1 || id > model::kAblationCount) {
      throw ConfigError("[ablation] ids: " + std::to_string(id) + " is not a configuration 1..8");
    }
  }
  if (bench.batch_size == 0 || bench.iterations == 0) {
    throw ConfigError("[bench] batch_size and iterations must be positive");
  }
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must be inside a section");
    }
    for (const auto& [key, value] : body) {
      if (!known->second.contains(key)) throw ConfigError("unknown key " + where(section, key));
    }
  }

  const Reader r(tree, base_dir);
  RunConfig c;

  auto& d = c.data;
  r.get("data", "name", d.name);
  r.get("data", "interactions", d.interactions);
  r.get("data", "attributes", d.attributes);
  r.get("data", "output_dir", d.output_dir);
  if (d.output_dir.is_relative() && !base_dir.empty()) d.output_dir = base_dir / d.output_dir;
  r.get("data", "use_attributes", d.use_attributes);
  r.get("data", "use_context", d.use_context);
  r.get("data", "min_history", d.min_history);

  auto& m = c.model;
  if (const auto* preset = r.raw("model", "preset")) m = model::preset(*preset);
  r.get("model", "d", m.d);
  r.get("model", "g", m.g);
  r.get("model", "heads", m.heads);
  r.get("model", "blocks", m.blocks);
  r.get("model", "max_len", m.max_len);
  r.get("model", "dropout", m.dropout);
  r.get("model", "l2_weight", m.l2_weight);
  r.get("model", "lr", m.lr);
  r.get_enum("model", "residual", m.residual, model::parse_residual_mode);
  r.get_enum("model", "scoring", m.scoring, model::parse_scoring_mode);
  r.get_enum("model", "positional", m.positional, model::parse_positional_mode);
  r.get_enum("model", "layout", m.layout, model::parse_feature_layout);
  r.get_enum("model", "target_mode", m.target_mode, model::parse_target_mode);
  r.get("model", "ca_residual", m.ca_residual);
  r.get("model", "leaky_slope", m.leaky_slope);
  r.get("model", "output_blocks", m.output_blocks);
  r.get("model", "ablation", c.ablation);

  auto& t = c.train;
  r.get("train", "epochs", t.epochs);
  r.get("train", "batch_size", t.batch_size);
  r.get("train", "seed", t.seed);
  r.get("train", "patience", t.patience);
  r.get("train", "eval_every", t.eval_every);
  r.get("train", "val_negatives", t.val_negatives);
  r.get("train", "k", t.k);
  r.get("train", "val_seed", t.val_seed);

  auto& e = c.eval;
  r.get_enum("eval", "protocol", e.protocol, evaluation::parse_protocol_kind);
  e.negatives = e.protocol == evaluation::ProtocolKind::auc ? 500 : 100;
  r.get("eval", "k", e.k);
  r.get("eval", "negatives", e.negatives);
  r.get_list("eval", "seeds", e.seeds);
  r.get("eval", "scorer", e.scorer);
  r.get("eval", "checkpoint", e.checkpoint);

  r.get_list("ablation", "ids", c.sweep.ids);
  r.get("ablation", "feature_grid", c.sweep.feature_grid);

  r.get("bench", "batch_size", c.bench.batch_size);
  r.get("bench", "warmup", c.bench.warmup);
  r.get("bench", "iterations", c.bench.iterations);

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::filesystem::absolute(path).parent_path());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  const auto& d = c.data;
  out << "[data]\n"
      << "name = " << d.name << '\n'
      << "interactions = " << d.interactions.string() << '\n'
      << "attributes = " << d.attributes.string() << '\n'
      << "output_dir = " << d.output_dir.string() << '\n'
      << "use_attributes = " << b(d.use_attributes) << '\n'
      << "use_context = " << b(d.use_context) << '\n'
      << "min_history = " << d.min_history << "\n\n";

  const auto& m = c.model;
  out << "[model]\n"
      << "d = " << m.d << '\n'
      << "g = " << m.g << '\n'
      << "heads = " << m.heads << '\n'
      << "blocks = " << m.blocks << '\n'
      << "max_len = " << m.max_len << '\n'
      << "dropout = " << format_real(m.dropout) << '\n'
      << "l2_weight = " << format_real(m.l2_weight) << '\n'
      << "lr = " << format_real(m.lr) << '\n'
      << "residual = " << model::to_string(m.residual) << '\n'
      << "scoring = " << model::to_string(m.scoring) << '\n'
      << "positional = " << model::to_string(m.positional) << '\n'
      << "layout = " << model::to_string(m.layout) << '\n'
      << "target_mode = " << model::to_string(m.target_mode) << '\n'
      << "ca_residual = " << b(m.ca_residual) << '\n'
      << "leaky_slope = " << format_real(m.leaky_slope) << '\n'
      << "output_blocks = " << m.output_blocks << '\n'
      << "ablation = " << c.ablation << "\n\n";

  const auto& t = c.train;
  out << "[train]\n"
      << "epochs = " << t.epochs << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "seed = " << t.seed << '\n'
      << "patience = " << t.patience << '\n'
      << "eval_every = " << t.eval_every << '\n'
      << "val_negatives = " << t.val_negatives << '\n'
      << "k = " << t.k << '\n'
      << "val_seed = " << t.val_seed << "\n\n";

  const auto& e = c.eval;
  out << "[eval]\n"
      << "protocol = " << evaluation::to_string(e.protocol) << '\n'
      << "k = " << e.k << '\n'
      << "negatives = " << e.negatives << '\n'
      << "seeds = " << join(e.seeds) << '\n'
      << "scorer = " << e.scorer << '\n'
      << "checkpoint = " << e.checkpoint.string() << "\n\n";

  out << "[ablation]\n"
      << "ids = " << join(c.sweep.ids) << '\n'
      << "feature_grid = " << b(c.sweep.feature_grid) << "\n\n";

  out << "[bench]\n"
      << "batch_size = " << c.bench.batch_size << '\n'
      << "warmup = " << c.bench.warmup << '\n'
      << "iterations = " << c.bench.iterations << '\n';
  return out.str();
}

}  // namespace carca::cli
