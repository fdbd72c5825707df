#pragma once
// Experiment configuration: INI-style sections with a fixed key schema.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "modsel/adversarial.hpp"
#include "modsel/core.hpp"
#include "modsel/environments.hpp"

namespace modsel::harness {

/// Startup error carrying a human-readable diagnostic (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MasterKind { Balancing, Adversarial, Single, RoundRobin };
enum class FamilyKind { Nested, Kappa, Eps, Scripted };
enum class ActionKind { Sphere, Ring, Fixed, SignShift, Alternating, Arms };
enum class BoundKind { Poly, DataDependent, EpsLinear };

struct ExperimentConfig {
  // [experiment]
  std::string scenario = "custom";
  std::int64_t horizon = 10000;
  int seeds = 1;
  std::uint64_t master_seed = 1;
  MasterKind master = MasterKind::Balancing;
  std::size_t single_index = 0;
  double delta = 0.05;
  double c_scale = 2.0;
  double radius_scale = 0.0;  ///< <= 0 selects 1 + 2 sigma (1 when clipped or Bernoulli)
  bool broadcast = false;
  bool persist = true;
  std::int64_t checkpoint_from = 0;  ///< > 0: only log rounds 2^k once T exceeds this
  std::string output = "out";
  int threads = 1;
  bool baseline = false;  ///< also run every learner standalone on the same seeds

  // [learners]
  FamilyKind family = FamilyKind::Nested;
  std::vector<int> dims{2, 4, 8, 16};
  int count = 4;
  double lambda = 1.0;
  double sigma = 0.1;  ///< noise level assumed by the learners
  double param_norm = 1.0;
  double action_norm = 1.0;
  BoundKind bound = BoundKind::Poly;
  double bound_constant = 0.0;  ///< <= 0 selects the nested-dimension constant
  double bound_exponent = 0.5;
  double eps_c1 = 2.0;
  double eps_c2 = 2.0;
  double eps_scale = 1.0;
  std::vector<double> means;
  std::vector<int> arms;
  std::vector<double> exponents;  ///< scripted: per-learner exponent, default bound_exponent
  std::vector<double> scales;     ///< scripted: per-learner bound scale, default 1
  RewardRangeMode reward_range = RewardRangeMode::Unit;

  // [environment]
  int dim = 16;
  int d_star = 2;
  ActionKind actions = ActionKind::Sphere;
  int action_count = 20;
  NoiseKind noise = NoiseKind::Gaussian;
  double noise_sigma = 0.1;
  double misspecification = 0.0;
  ClipMode clip = ClipMode::None;
  double theta_norm = 1.0;
  std::vector<double> theta;  ///< explicit theta*, overrides the random draw
  int block = 0;              ///< sign-shift: rounds per phase
  int half = 1;               ///< sign-shift: width of the mirrored coordinate block
  double filler = 0.3;

  void validate() const;
  double effective_radius_scale() const {
    if (radius_scale > 0.0) return radius_scale;
    if (clip == ClipMode::Unit || noise == NoiseKind::Bernoulli) return 1.0;
    return 1.0 + 2.0 * noise_sigma;
  }
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("invalid value for '" + key + "': '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

template <class E>
E parse_enum(const std::string& key, const std::string& text,
             const std::map<std::string, E>& names) {
  auto it = names.find(text);
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [k, v] : names) allowed += (allowed.empty() ? "" : ", ") + k;
  throw ConfigError("invalid value for '" + key + "': '" + text + "' (expected one of " +
                    allowed + ")");
}

}  // namespace detail

inline const std::map<std::string, MasterKind>& master_names() {
  static const std::map<std::string, MasterKind> m{{"balancing", MasterKind::Balancing},
                                                   {"adversarial", MasterKind::Adversarial},
                                                   {"single", MasterKind::Single},
                                                   {"round-robin", MasterKind::RoundRobin}};
  return m;
}

inline std::vector<std::string> scenario_names() {
  return {"custom", "linucb-grid", "nested-dims", "kappa-grid", "eps-grid", "scripted",
          "adversarial-nested", "adversarial-wellspec"};
}

/// Fills the defaults of a named scenario. Later keys in the file override them.
inline void apply_preset(ExperimentConfig& c, const std::string& name) {
  c.scenario = name;
  if (name == "custom") return;
  if (name == "linucb-grid") {
    c.family = FamilyKind::Kappa;
    c.count = 7;
    c.bound = BoundKind::DataDependent;
    c.dim = 10;
    c.d_star = 10;
    c.actions = ActionKind::Fixed;
    c.action_count = 100;
    c.sigma = 1.0;
    c.noise_sigma = 0.1;
    c.horizon = 20000;
  } else if (name == "nested-dims") {
    c.family = FamilyKind::Nested;
    c.dims = {2, 4, 8, 16};
    c.dim = 16;
    c.d_star = 2;
    c.actions = ActionKind::Ring;
    c.action_count = 64;
    c.sigma = 0.1;
    c.noise_sigma = 0.1;
    c.horizon = 65536;
  } else if (name == "kappa-grid") {
    c.family = FamilyKind::Kappa;
    c.count = 7;
    c.bound = BoundKind::DataDependent;
    c.dim = 5;
    c.d_star = 2;
    c.actions = ActionKind::Ring;
    c.action_count = 64;
    c.sigma = 1.0;
    c.noise_sigma = 0.1;
    c.horizon = 10000;
  } else if (name == "eps-grid") {
    c.family = FamilyKind::Eps;
    c.count = 5;
    c.bound = BoundKind::EpsLinear;
    c.dim = 4;
    c.d_star = 4;
    c.misspecification = 0.125;
    c.horizon = 10000;
  } else if (name == "scripted") {
    c.family = FamilyKind::Scripted;
    c.means = {0.5, 0.5, 0.5};
    c.arms = {0, 1, 2};
    c.actions = ActionKind::Arms;
    c.noise = NoiseKind::Bernoulli;
    c.dim = 1;
    c.d_star = 1;
    c.horizon = 10000;
  } else if (name == "adversarial-wellspec") {
    c.master = MasterKind::Adversarial;
    c.family = FamilyKind::Nested;
    c.dims = {2, 4, 6};
    c.dim = 6;
    c.d_star = 2;
    c.actions = ActionKind::SignShift;
    c.half = 2;
    c.block = 0;
    c.action_count = 64;
    c.horizon = 10000;
  } else if (name == "adversarial-nested") {
    c.master = MasterKind::Adversarial;
    c.family = FamilyKind::Nested;
    c.dims = {2, 4, 8};
    c.dim = 8;
    c.d_star = 4;
    c.actions = ActionKind::SignShift;
    c.half = 2;
    c.block = 0;
    c.action_count = 64;
    c.persist = false;
    c.horizon = 65536;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
}

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (horizon < 1) fail("horizon must be >= 1");
  if (seeds < 1) fail("seeds must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0, 1)");
  if (!(c_scale >= 0.0)) fail("c_scale must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
  if (!(lambda > 0.0)) fail("lambda must be positive");
  if (!(sigma >= 0.0) || !(noise_sigma >= 0.0)) fail("noise levels must be >= 0");
  if (dim < 1) fail("environment dim must be >= 1");
  if (d_star < 1 || d_star > dim) fail("d_star must lie in [1, dim]");
  if (action_count < 1) fail("action_count must be >= 1");
  if (!(misspecification >= 0.0)) fail("misspecification must be >= 0");
  if (!theta.empty() && static_cast<int>(theta.size()) != dim) fail("theta must have dim entries");
  switch (family) {
    case FamilyKind::Nested:
      if (dims.empty()) fail("nested family needs dims");
      for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] < 1 || dims[i] > dim) fail("nested dims must lie in [1, dim]");
        if (i > 0 && dims[i] <= dims[i - 1]) fail("nested dims must be strictly increasing");
      }
      break;
    case FamilyKind::Kappa:
    case FamilyKind::Eps:
      if (count < 1 || count > 30) fail("grid count must lie in [1, 30]");
      break;
    case FamilyKind::Scripted:
      if (means.empty()) fail("scripted family needs means");
      if (arms.size() != means.size()) fail("scripted family needs one arm per mean");
      if (!exponents.empty() && exponents.size() != means.size())
        fail("scripted exponents must match means");
      if (!scales.empty() && scales.size() != means.size())
        fail("scripted scales must match means");
      if (actions != ActionKind::Arms) fail("scripted family requires actions = arms");
      break;
  }
  if (actions == ActionKind::Arms && family != FamilyKind::Scripted)
    fail("actions = arms is only valid with the scripted family");
  if (master == MasterKind::Adversarial && family == FamilyKind::Scripted)
    fail("the adversarial master needs OFUL learners");
  if (actions == ActionKind::Ring && d_star >= dim) fail("ring actions need d_star < dim");
  if (!(filler >= 0.0 && filler < 1.0)) fail("filler must lie in [0, 1)");
  if (actions == ActionKind::SignShift && (2 * half >= dim || half < 1))
    fail("sign-shift requires 1 <= half and 2 * half < dim");
  const std::size_t m = family == FamilyKind::Nested     ? dims.size()
                        : family == FamilyKind::Scripted ? means.size()
                                                         : static_cast<std::size_t>(count);
  if (master == MasterKind::Single && single_index >= m) fail("single_index out of range");
}

/// Parses INI text. Unknown sections or keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment",
       {"scenario", "horizon", "seeds", "master_seed", "master", "single_index", "delta",
        "c_scale", "radius_scale", "broadcast", "persist", "checkpoint_from", "output",
        "threads", "baseline"}},
      {"learners",
       {"family", "dims", "count", "lambda", "sigma", "param_norm", "action_norm", "bound",
        "bound_constant", "bound_exponent", "eps_c1", "eps_c2", "eps_scale", "means", "arms",
        "exponents", "scales", "reward_range"}},
      {"environment",
       {"dim", "d_star", "actions", "action_count", "noise", "noise_sigma", "misspecification",
        "clip", "theta_norm", "theta", "block", "half", "filler"}}};
  for (const auto& [section, body] : tree) {
    auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty() && body.empty())
      throw ConfigError("top-level key '" + section + "' outside any section");
    for (const auto& [key, value] : body)
      if (!it->second.contains(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }

  ExperimentConfig c;
  if (auto s = tree.get_optional<std::string>("experiment.scenario")) apply_preset(c, *s);

  using namespace detail;
  auto each = [&](const char* section, auto&& fn) {
    if (auto node = tree.get_child_optional(section))
      for (const auto& [key, value] : *node) fn(key, value.data());
  };
  each("experiment", [&](const std::string& k, const std::string& v) {
    if (k == "scenario") return;
    if (k == "horizon") c.horizon = parse_number<std::int64_t>(k, v);
    else if (k == "seeds") c.seeds = parse_number<int>(k, v);
    else if (k == "master_seed") c.master_seed = parse_number<std::uint64_t>(k, v);
    else if (k == "master") c.master = parse_enum(k, v, master_names());
    else if (k == "single_index") c.single_index = parse_number<std::size_t>(k, v);
    else if (k == "delta") c.delta = parse_number<double>(k, v);
    else if (k == "c_scale") c.c_scale = parse_number<double>(k, v);
    else if (k == "radius_scale") c.radius_scale = v == "auto" ? 0.0 : parse_number<double>(k, v);
    else if (k == "broadcast") c.broadcast = parse_bool(k, v);
    else if (k == "persist") c.persist = parse_bool(k, v);
    else if (k == "checkpoint_from") c.checkpoint_from = parse_number<std::int64_t>(k, v);
    else if (k == "output") c.output = v;
    else if (k == "threads") c.threads = parse_number<int>(k, v);
    else if (k == "baseline") c.baseline = parse_bool(k, v);
  });
  each("learners", [&](const std::string& k, const std::string& v) {
    if (k == "family")
      c.family = parse_enum(k, v, std::map<std::string, FamilyKind>{
                                      {"nested", FamilyKind::Nested},
                                      {"kappa", FamilyKind::Kappa},
                                      {"eps", FamilyKind::Eps},
                                      {"scripted", FamilyKind::Scripted}});
    else if (k == "dims") c.dims = parse_list<int>(k, v);
    else if (k == "count") c.count = parse_number<int>(k, v);
    else if (k == "lambda") c.lambda = parse_number<double>(k, v);
    else if (k == "sigma") c.sigma = parse_number<double>(k, v);
    else if (k == "param_norm") c.param_norm = parse_number<double>(k, v);
    else if (k == "action_norm") c.action_norm = parse_number<double>(k, v);
    else if (k == "bound")
      c.bound = parse_enum(k, v, std::map<std::string, BoundKind>{
                                     {"poly", BoundKind::Poly},
                                     {"data", BoundKind::DataDependent},
                                     {"eps-linear", BoundKind::EpsLinear}});
    else if (k == "bound_constant") c.bound_constant = v == "auto" ? 0.0 : parse_number<double>(k, v);
    else if (k == "bound_exponent") c.bound_exponent = parse_number<double>(k, v);
    else if (k == "eps_c1") c.eps_c1 = parse_number<double>(k, v);
    else if (k == "eps_c2") c.eps_c2 = parse_number<double>(k, v);
    else if (k == "eps_scale") c.eps_scale = parse_number<double>(k, v);
    else if (k == "means") c.means = parse_list<double>(k, v);
    else if (k == "arms") c.arms = parse_list<int>(k, v);
    else if (k == "exponents") c.exponents = parse_list<double>(k, v);
    else if (k == "scales") c.scales = parse_list<double>(k, v);
    else if (k == "reward_range")
      c.reward_range = parse_enum(k, v, std::map<std::string, RewardRangeMode>{
                                            {"unit", RewardRangeMode::Unit},
                                            {"norm", RewardRangeMode::NormProduct}});
  });
  each("environment", [&](const std::string& k, const std::string& v) {
    if (k == "dim") c.dim = parse_number<int>(k, v);
    else if (k == "d_star") c.d_star = parse_number<int>(k, v);
    else if (k == "actions")
      c.actions = parse_enum(k, v, std::map<std::string, ActionKind>{
                                       {"sphere", ActionKind::Sphere},
                                       {"ring", ActionKind::Ring},
                                       {"fixed", ActionKind::Fixed},
                                       {"sign-shift", ActionKind::SignShift},
                                       {"alternating", ActionKind::Alternating},
                                       {"arms", ActionKind::Arms}});
    else if (k == "action_count") c.action_count = parse_number<int>(k, v);
    else if (k == "noise")
      c.noise = parse_enum(k, v, std::map<std::string, NoiseKind>{
                                     {"gaussian", NoiseKind::Gaussian},
                                     {"bernoulli", NoiseKind::Bernoulli}});
    else if (k == "noise_sigma") c.noise_sigma = parse_number<double>(k, v);
    else if (k == "misspecification") c.misspecification = parse_number<double>(k, v);
    else if (k == "clip")
      c.clip = parse_enum(k, v, std::map<std::string, ClipMode>{{"none", ClipMode::None},
                                                                {"unit", ClipMode::Unit}});
    else if (k == "theta_norm") c.theta_norm = parse_number<double>(k, v);
    else if (k == "theta") c.theta = parse_list<double>(k, v);
    else if (k == "block") c.block = parse_number<int>(k, v);
    else if (k == "half") c.half = parse_number<int>(k, v);
    else if (k == "filler") c.filler = parse_number<double>(k, v);
  });
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace modsel::harness
