#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "riskagg/error.hpp"

namespace riskagg::pipeline {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Typed access to one INI section; every key must be consumed so that a
// misspelled key is reported instead of silently ignored.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::optional<std::string> text(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    // Inline comments start at ';'.
    const std::string& raw = tree_->find(key)->second.data();
    return trim(raw.substr(0, raw.find(';')));
  }

  std::string text(const std::string& key, const std::string& fallback) { return text(key).value_or(fallback); }

  template <class T>
  T number(const std::string& key, T fallback) {
    const auto raw = text(key);
    if (!raw) return fallback;
    T value{};
    const auto* end = raw->data() + raw->size();
    const auto [ptr, ec] = std::from_chars(raw->data(), end, value);
    if (ec != std::errc() || ptr != end) fail(key, "'" + *raw + "' is not a valid number");
    return value;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto raw = text(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
    if (*raw == "false" || *raw == "0" || *raw == "no") return false;
    fail(key, "expected true or false");
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(text(key, ""))) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) fail(key, "'" + item + "' is not a valid number");
      out.push_back(v);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const std::string where = name_.empty() ? key : "[" + name_ + "] " + key;
    throw Error(Errc::Config, where + ": " + why);
  }

  void finish() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty() || child.data().empty()) continue;
      if (!used_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> used_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<Provenance> parse_models(Section& s, const std::string& key, std::vector<Provenance> fallback) {
  const auto raw = s.text(key);
  if (!raw) return fallback;
  std::vector<Provenance> out;
  try {
    for (const auto& m : split_list(*raw)) out.push_back(parse_provenance(m));
  } catch (const Error& e) {
    s.fail(key, e.what());
  }
  return out;
}

Architecture parse_architecture(Section& s, const std::string& prefix, Architecture fallback) {
  Architecture a = fallback;
  if (const auto hidden = s.text(prefix + "_hidden")) {
    a.hidden.clear();
    for (const auto& item : split_list(*hidden)) {
      int w = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), w);
      if (ec != std::errc() || ptr != item.data() + item.size() || w < 1) s.fail(prefix + "_hidden", "widths must be positive integers");
      a.hidden.push_back(w);
    }
  }
  if (const auto act = s.text(prefix + "_activation")) {
    try {
      a.activation = parse_activation(*act);
    } catch (const Error& e) {
      s.fail(prefix + "_activation", e.what());
    }
  }
  a.has_bias = s.flag(prefix + "_bias", a.has_bias);
  return a;
}

ScenarioSpec parse_scenario(const std::string& name, const pt::ptree& tree) {
  Section s("scenario." + name, &tree);
  ScenarioSpec spec;
  spec.name = name;
  const std::string type = s.text("type", "bump");
  if (type == "bump") {
    spec.kind = ScenarioKind::Bump;
    spec.core = split_list(s.text("core", ""));
    spec.shifts_sd = s.numbers("shifts");
    if (spec.core.empty()) s.fail("core", "a bump scenario needs at least one core factor");
    if (spec.shifts_sd.size() == 1 && spec.core.size() > 1) spec.shifts_sd.assign(spec.core.size(), spec.shifts_sd.front());
    if (spec.shifts_sd.size() != spec.core.size()) s.fail("shifts", "one shift per core factor");
    const std::string prop = s.text("propagation", "auto");
    if (prop == "auto") {
      spec.propagation = PropagationChoice::Auto;
    } else if (prop == "conditional") {
      spec.propagation = PropagationChoice::Conditional;
    } else if (prop == "ae") {
      spec.propagation = PropagationChoice::AeDecoder;
    } else if (prop == "none") {
      spec.propagation = PropagationChoice::None;
    } else {
      s.fail("propagation", "expected auto, conditional, ae or none");
    }
  } else if (type == "ellipsoid") {
    spec.kind = ScenarioKind::Ellipsoid;
    spec.factors = split_list(s.text("factors", ""));
    if (spec.factors.empty()) s.fail("factors", "an ellipsoid scenario needs at least one factor");
    spec.radius = s.number("radius", 2.0);
    if (!(spec.radius > 0.0)) s.fail("radius", "must be positive");
  } else {
    s.fail("type", "expected bump or ellipsoid");
  }
  spec.models = parse_models(s, "models", {});
  s.finish();
  return spec;
}

}  // namespace

std::string config_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::Config, std::string("config: ") + e.what());
  }

  RunConfig cfg;
  cfg.hash = config_hash(text);

  Section top("", &root);
  cfg.seed = top.number<std::uint64_t>("seed", 0);
  cfg.output_dir = resolve(base_dir, top.text("output", "out"));
  top.finish();

  Section input("input", child(root, "input"));
  const auto factors = input.text("factors");
  if (!factors) input.fail("factors", "required");
  cfg.factors_path = resolve(base_dir, *factors);
  if (const auto a = input.text("assets")) cfg.assets_path = resolve(base_dir, *a);
  if (const auto c = input.text("categories")) cfg.categories_path = resolve(base_dir, *c);
  const std::string kind = input.text("kind", "returns");
  if (kind != "returns" && kind != "prices") input.fail("kind", "expected returns or prices");
  cfg.prices = kind == "prices";
  const std::string method = input.text("method", "log");
  if (method != "log" && method != "arithmetic") input.fail("method", "expected log or arithmetic");
  cfg.return_method = method == "log" ? ReturnMethod::Log : ReturnMethod::Arithmetic;
  input.finish();

  Section window("window", child(root, "window"));
  cfg.window.width = window.number<Eigen::Index>("width", 250);
  cfg.window.stride = window.number<Eigen::Index>("stride", 1);
  cfg.window.month_end = window.flag("month_end", false);
  cfg.diagnose_components = window.number<Eigen::Index>("components", 6);
  if (cfg.window.width < 2) window.fail("width", "must be at least 2");
  if (cfg.window.stride < 1) window.fail("stride", "must be at least 1");
  if (cfg.diagnose_components < 1) window.fail("components", "must be at least 1");
  window.finish();

  Section cluster("cluster", child(root, "cluster"));
  const std::string grouping = cluster.text("grouping", cfg.categories_path ? "categories" : "ward");
  if (grouping == "categories") {
    cfg.grouping = Grouping::Categories;
    if (!cfg.categories_path) cluster.fail("grouping", "categories grouping needs [input] categories");
  } else if (grouping == "ward") {
    cfg.grouping = Grouping::Ward;
  } else {
    cluster.fail("grouping", "expected categories or ward");
  }
  cfg.clusters = cluster.number("k", 6);
  if (cfg.clusters < 1) cluster.fail("k", "must be at least 1");
  cluster.finish();

  Section aggregate("aggregate", child(root, "aggregate"));
  cfg.aggregate_models = parse_models(aggregate, "models", cfg.aggregate_models);
  cfg.global_pca_factors = aggregate.number<Eigen::Index>("pca_factors", 6);
  if (cfg.global_pca_factors < 1) aggregate.fail("pca_factors", "must be at least 1");
  cfg.plain_ae.enabled = aggregate.flag("plain_ae", false);
  cfg.plain_ae.bottleneck = aggregate.number("plain_bottleneck", 6);
  if (cfg.plain_ae.bottleneck < 1) aggregate.fail("plain_bottleneck", "must be at least 1");
  cfg.plain_ae.architecture = parse_architecture(aggregate, "plain", cfg.plain_ae.architecture);
  aggregate.finish();

  Section train("train", child(root, "train"));
  cfg.train.max_epochs = train.number("max_epochs", cfg.train.max_epochs);
  cfg.train.batch_size = train.number("batch_size", cfg.train.batch_size);
  cfg.train.step_size = train.number("step_size", cfg.train.step_size);
  cfg.train.adam_beta1 = train.number("beta1", cfg.train.adam_beta1);
  cfg.train.adam_beta2 = train.number("beta2", cfg.train.adam_beta2);
  cfg.train.adam_epsilon = train.number("epsilon", cfg.train.adam_epsilon);
  cfg.train.l2 = train.number("l2", cfg.train.l2);
  cfg.train.validation_fraction = train.number("validation_fraction", cfg.train.validation_fraction);
  cfg.train.patience = train.number("patience", cfg.train.patience);
  cfg.encoder = parse_architecture(train, "encoder", cfg.encoder);
  cfg.decoder = parse_architecture(train, "decoder", cfg.decoder);
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    train.fail("", e.what());
  }
  train.finish();

  Section calibrate("calibrate", child(root, "calibrate"));
  cfg.calibration_window = calibrate.number<Eigen::Index>("window", 750);
  if (cfg.calibration_window < 3) calibrate.fail("window", "must be at least 3");
  calibrate.finish();

  Section stress("stress", child(root, "stress"));
  cfg.stress_models = parse_models(stress, "models", cfg.stress_models);
  if (const auto w = stress.text("weights")) cfg.weights_path = resolve(base_dir, *w);
  stress.finish();

  for (const auto& [name, tree] : root) {
    if (name.rfind("scenario.", 0) == 0) {
      const std::string scenario = name.substr(9);
      if (scenario.empty()) throw Error(Errc::Config, "scenario section needs a name");
      // The name becomes part of output file names.
      if (scenario.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos) {
        throw Error(Errc::Config, "scenario name '" + scenario + "' may only use letters, digits, '_' and '-'");
      }
      cfg.scenarios.push_back(parse_scenario(scenario, tree));
    } else if (!tree.empty()) {
      static const std::set<std::string> known{"input", "window", "cluster", "aggregate", "train", "calibrate", "stress"};
      if (!known.count(name)) throw Error(Errc::Config, "unknown section [" + name + "]");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

}  // namespace riskagg::pipeline
