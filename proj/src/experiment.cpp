#include "lqrpg/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lqrpg/errors.hpp"

namespace lqrpg {

using json = nlohmann::json;

namespace {

// Typed access to a JSON value that tracks its JSON pointer.
class Node {
public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config field " + (path_.empty() ? std::string("/") : path_) + ": " + what);
  }

  void require_object() const {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow_keys(std::initializer_list<const char*> keys) const {
    require_object();
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) child_path_fail(key, "unknown key");
    }
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Node at(const char* key) const {
    if (!has(key)) fail(std::string("missing required key '") + key + "'");
    return Node(j_.at(key), path_ + "/" + key);
  }

  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "/" + std::to_string(i)); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  /// Nested row-major array of numbers.
  Mat matrix() const {
    if (!j_.is_array() || j_.empty()) fail("expected a non-empty array of rows");
    const std::size_t rows = j_.size();
    if (!j_[0].is_array() || j_[0].empty()) fail("expected rows to be non-empty arrays");
    const std::size_t cols = j_[0].size();
    Mat out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const Node row = at(i);
      if (!row.raw().is_array() || row.raw().size() != cols) row.fail("ragged matrix row");
      for (std::size_t c = 0; c < cols; ++c) out(i, c) = row.at(c).number();
    }
    return out;
  }

  double number_or(const char* key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }

private:
  [[noreturn]] void child_path_fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config field " + path_ + "/" + key + ": " + what);
  }

  const json& j_;
  std::string path_;
};

GridAxis parse_axis(const Node& node) {
  if (!node.raw().is_array() || node.raw().size() != 3) node.fail("expected [lo, hi, steps]");
  GridAxis axis;
  axis.lo = node.at(std::size_t{0}).number();
  axis.hi = node.at(std::size_t{1}).number();
  axis.steps = static_cast<int>(node.at(std::size_t{2}).integer());
  if (axis.steps < 1) node.fail("steps must be at least 1");
  return axis;
}

ProblemSpec parse_problem(const Node& node) {
  node.require_object();
  ProblemSpec spec;
  const std::string type = node.at("type").string();
  if (type == "pendulum") {
    node.allow_keys({"type", "g", "length", "mass", "ts", "gamma"});
    spec.kind = ProblemSpec::Kind::pendulum;
    auto& p = spec.pendulum;
    p.g = node.number_or("g", p.g);
    p.length = node.number_or("length", p.length);
    p.mass = node.number_or("mass", p.mass);
    p.ts = node.number_or("ts", p.ts);
    p.gamma = node.number_or("gamma", p.gamma);
  } else if (type == "shear_building") {
    node.allow_keys({"type", "floors", "mass", "stiffness", "damping", "ts", "gamma", "lambda_hi",
                     "lambda_lo", "k_hi", "epsilon", "noise_var", "init_var", "R", "seed"});
    spec.kind = ProblemSpec::Kind::shear_building;
    auto& p = spec.building;
    if (node.has("floors")) p.floors = static_cast<int>(node.at("floors").integer());
    p.mass = node.number_or("mass", p.mass);
    p.stiffness = node.number_or("stiffness", p.stiffness);
    p.damping = node.number_or("damping", p.damping);
    p.ts = node.number_or("ts", p.ts);
    p.gamma = node.number_or("gamma", p.gamma);
    p.lambda_hi = node.number_or("lambda_hi", p.lambda_hi);
    p.lambda_lo = node.number_or("lambda_lo", p.lambda_lo);
    if (node.has("k_hi")) p.k_hi = static_cast<int>(node.at("k_hi").integer());
    p.epsilon = node.number_or("epsilon", p.epsilon);
    p.noise_var = node.number_or("noise_var", p.noise_var);
    p.init_var = node.number_or("init_var", p.init_var);
    p.R = node.number_or("R", p.R);
    if (node.has("seed")) p.seed = static_cast<std::uint64_t>(node.at("seed").integer());
  } else if (type == "scalar") {
    node.allow_keys({"type", "a", "b", "Q", "R", "gamma", "sigma0_sq", "sigma_sq"});
    spec.kind = ProblemSpec::Kind::scalar;
    auto& s = spec.scalar;
    s.a = node.number_or("a", s.a);
    s.b = node.number_or("b", s.b);
    s.Q = node.number_or("Q", s.Q);
    s.R = node.number_or("R", s.R);
    s.gamma = node.number_or("gamma", s.gamma);
    s.sigma0_sq = node.number_or("sigma0_sq", s.sigma0_sq);
    s.sigma_sq = node.number_or("sigma_sq", s.sigma_sq);
  } else if (type == "inline") {
    node.allow_keys({"type", "A", "B", "Q", "R", "gamma", "Sigma_w", "Sigma_0"});
    spec.kind = ProblemSpec::Kind::inline_matrices;
    auto& p = spec.matrices;
    p.A = node.at("A").matrix();
    p.B = node.at("B").matrix();
    p.Q = node.at("Q").matrix();
    p.R = node.at("R").matrix();
    p.gamma = node.at("gamma").number();
    p.Sigma_w = node.at("Sigma_w").matrix();
    p.Sigma_0 = node.at("Sigma_0").matrix();
    try {
      p.validate();
    } catch (const Error& e) {
      node.fail(e.what());
    }
  } else {
    node.at("type").fail("unknown problem type '" + type +
                         "' (expected pendulum, shear_building, scalar or inline)");
  }
  return spec;
}

StepMode parse_step(const Node& node) {
  node.allow_keys({"mode", "alpha", "c_armijo", "shrink", "max_backtracks"});
  const std::string mode = node.at("mode").string();
  StepMode step;
  if (mode == "fixed") {
    step = StepMode::fixed(node.at("alpha").number());
  } else if (mode == "backtracking") {
    step = StepMode::backtracking(node.number_or("alpha", 1.0));
  } else {
    node.at("mode").fail("expected 'fixed' or 'backtracking'");
  }
  step.c_armijo = node.number_or("c_armijo", step.c_armijo);
  step.shrink = node.number_or("shrink", step.shrink);
  if (node.has("max_backtracks")) {
    step.max_backtracks = static_cast<int>(node.at("max_backtracks").integer());
  }
  return step;
}

MethodSpec parse_method_spec(const Node& node) {
  node.allow_keys({"name", "method", "step", "grad_tol", "max_iter", "newton_damping"});
  Method m{};
  try {
    m = parse_method(node.at("method").string());
  } catch (const InvalidParameter& e) {
    node.at("method").fail(e.what());
  }
  MethodSpec spec = default_method(m);
  if (node.has("name")) spec.name = node.at("name").string();
  if (node.has("step")) spec.cfg.step = parse_step(node.at("step"));
  spec.cfg.grad_tol = node.number_or("grad_tol", spec.cfg.grad_tol);
  if (node.has("max_iter")) spec.cfg.max_iter = static_cast<int>(node.at("max_iter").integer());
  spec.cfg.newton_damping = node.number_or("newton_damping", spec.cfg.newton_damping);
  try {
    spec.cfg.validate();
  } catch (const InvalidParameter& e) {
    node.fail(e.what());
  }
  return spec;
}

std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace

MethodSpec default_method(Method m) {
  MethodSpec spec;
  spec.name = std::string(to_string(m));
  spec.cfg.method = m;
  switch (m) {
  case Method::first_order:
    spec.cfg.step = StepMode::backtracking(1.0);
    spec.cfg.max_iter = 2000;
    break;
  case Method::gauss_newton:
    spec.cfg.step = StepMode::fixed(0.5);
    spec.cfg.max_iter = 200;
    break;
  case Method::newton:
    spec.cfg.step = StepMode::fixed(1.0);
    spec.cfg.max_iter = 100;
    break;
  }
  spec.cfg.grad_tol = 1e-8;
  return spec;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config field /methods: at least one method is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (!names.insert(methods[i].name).second) {
      throw ConfigError("config field /methods/" + std::to_string(i) + "/name: duplicate name '" +
                        methods[i].name + "'");
    }
    if (methods[i].name.empty() ||
        methods[i].name.find_first_of("/\\") != std::string::npos) {
      throw ConfigError("config field /methods/" + std::to_string(i) +
                        "/name: must be a non-empty file-name-safe string");
    }
  }
  if (problem.uses_randomness() && !seed) {
    throw ConfigError("config field /seed: required because the problem generator is random");
  }
  if (seed_gain.r_factor && !(*seed_gain.r_factor > 0.0)) {
    throw ConfigError("config field /seed_gain/r_factor: must be positive");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config syntax error at " + position_of(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
  const Node root(j, "");
  root.allow_keys({"problem", "seed_gain", "methods", "seed", "output_dir", "emit", "landscape"});

  ExperimentConfig cfg;
  cfg.problem = parse_problem(root.at("problem"));
  if (root.has("seed")) cfg.seed = static_cast<std::uint64_t>(root.at("seed").integer());
  if (cfg.problem.kind == ProblemSpec::Kind::shear_building && cfg.seed &&
      !root.at("problem").has("seed")) {
    cfg.problem.building.seed = *cfg.seed;
  }
  if (cfg.problem.kind == ProblemSpec::Kind::shear_building && root.at("problem").has("seed") &&
      !cfg.seed) {
    cfg.seed = cfg.problem.building.seed;
  }

  if (root.has("seed_gain")) {
    const Node sg = root.at("seed_gain");
    sg.allow_keys({"K", "r_factor"});
    if (sg.has("K")) cfg.seed_gain.K = sg.at("K").matrix();
    if (sg.has("r_factor")) cfg.seed_gain.r_factor = sg.at("r_factor").number();
    if (cfg.seed_gain.K && cfg.seed_gain.r_factor) sg.fail("give either K or r_factor, not both");
  }

  const Node methods = root.at("methods");
  if (!methods.raw().is_array()) methods.fail("expected an array");
  for (std::size_t i = 0; i < methods.raw().size(); ++i) {
    cfg.methods.push_back(parse_method_spec(methods.at(i)));
  }
  if (root.has("output_dir")) cfg.output_dir = root.at("output_dir").string();
  if (root.has("emit")) {
    const Node emit = root.at("emit");
    emit.allow_keys({"trace_csv", "landscape_grid", "summary"});
    if (emit.has("trace_csv")) cfg.emit.trace_csv = emit.at("trace_csv").boolean();
    if (emit.has("landscape_grid")) cfg.emit.landscape_grid = emit.at("landscape_grid").boolean();
    if (emit.has("summary")) cfg.emit.summary = emit.at("summary").boolean();
  }
  if (root.has("landscape")) {
    const Node ls = root.at("landscape");
    ls.allow_keys({"theta1", "theta2", "steps"});
    if (ls.has("theta1")) cfg.landscape.theta1 = parse_axis(ls.at("theta1"));
    if (ls.has("theta2")) cfg.landscape.theta2 = parse_axis(ls.at("theta2"));
    if (ls.has("steps")) cfg.landscape.steps = static_cast<int>(ls.at("steps").integer());
    if (cfg.landscape.theta1.has_value() != cfg.landscape.theta2.has_value()) {
      ls.fail("give both theta1 and theta2 or neither");
    }
    if (cfg.landscape.steps < 1) ls.at("steps").fail("must be at least 1");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig default_pendulum_config() {
  ExperimentConfig cfg;
  cfg.problem.kind = ProblemSpec::Kind::pendulum;
  cfg.methods = {default_method(Method::first_order), default_method(Method::gauss_newton),
                 default_method(Method::newton)};
  cfg.seed = 0;
  cfg.emit.landscape_grid = true;
  return cfg;
}

LqrProblem build_problem(const ExperimentConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  switch (p.kind) {
  case ProblemSpec::Kind::pendulum:
    return make_pendulum(p.pendulum);
  case ProblemSpec::Kind::shear_building:
    return make_shear_building(p.building);
  case ProblemSpec::Kind::scalar: {
    LqrProblem prob = to_problem(p.scalar);
    prob.validate();
    return prob;
  }
  case ProblemSpec::Kind::inline_matrices:
    p.matrices.validate();
    return p.matrices;
  }
  throw ConfigError("unknown problem kind");
}

Gain build_seed_gain(const ExperimentConfig& cfg, const LqrProblem& prob) {
  if (cfg.seed_gain.K) {
    const Mat& k = *cfg.seed_gain.K;
    if (k.rows() != prob.m() || k.cols() != prob.n()) {
      throw ConfigError("config field /seed_gain/K: expected " + std::to_string(prob.m()) + "x" +
                        std::to_string(prob.n()));
    }
    return Gain(k);
  }
  const double fallback = cfg.problem.kind == ProblemSpec::Kind::shear_building ? 3.0 : 100.0;
  return inflated_r_seed(prob, cfg.seed_gain.r_factor.value_or(fallback));
}

std::pair<GridAxis, GridAxis> default_window(const Gain& k_star, const Gain& seed, int steps) {
  const Vec c = k_star.theta();
  const Vec s = seed.theta();
  GridAxis axes[2];
  for (int i = 0; i < 2; ++i) {
    const double half = 1.25 * std::max({std::abs(s(i) - c(i)), 0.1 * std::abs(c(i)), 1e-3});
    axes[i] = GridAxis{c(i) - half, c(i) + half, steps};
  }
  return {axes[0], axes[1]};
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const RunRecord& rec) {
  std::string out = "k,J,grad_norm,gain_error,alpha,backtracks\n";
  for (const auto& it : rec.iterations) {
    out += std::to_string(it.k) + ',' + format_real(it.J) + ',' + format_real(it.grad_norm) + ',' +
           format_real(it.gain_error) + ',' + format_real(it.alpha_used) + ',' +
           std::to_string(it.backtracks) + '\n';
  }
  return out;
}

std::string path_csv(const RunRecord& rec) {
  std::string out = "k";
  const Eigen::Index d = rec.iterations.empty() ? 0 : rec.iterations.front().theta.size();
  for (Eigen::Index i = 0; i < d; ++i) out += ",theta" + std::to_string(i + 1);
  out += ",J\n";
  for (const auto& it : rec.iterations) {
    out += std::to_string(it.k);
    for (Eigen::Index i = 0; i < d; ++i) out += ',' + format_real(it.theta(i));
    out += ',' + format_real(it.J) + '\n';
  }
  return out;
}

std::string landscape_csv(const LandscapeGrid& grid) {
  std::string out = "i,j,theta1,theta2,stabilizing,J\n";
  for (int i = 0; i < grid.theta1.steps; ++i) {
    for (int j = 0; j < grid.theta2.steps; ++j) {
      const bool ok = grid.stabilizing(i, j);
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_real(grid.theta1.at(i)) +
             ',' + format_real(grid.theta2.at(j)) + ',' + (ok ? "1" : "0") + ',' +
             (ok ? format_real(grid.J(i, j)) : std::string()) + '\n';
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json matrix_json(const Mat& x) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const char* kind_name(ProblemSpec::Kind k) {
  switch (k) {
  case ProblemSpec::Kind::pendulum:
    return "pendulum";
  case ProblemSpec::Kind::shear_building:
    return "shear_building";
  case ProblemSpec::Kind::scalar:
    return "scalar";
  case ProblemSpec::Kind::inline_matrices:
    return "inline";
  }
  return "unknown";
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  const LqrProblem prob = build_problem(cfg);
  const Gain seed = build_seed_gain(cfg, prob);
  const OptimalGain opt = optimal_gain(prob);
  std::filesystem::create_directories(cfg.output_dir);

  for (const MethodSpec& spec : cfg.methods) {
    MethodOutcome outcome;
    outcome.name = spec.name;
    OptimizerConfig oc = spec.cfg;
    oc.seed_gain = seed;
    try {
      outcome.record = run(prob, oc, opt.gain);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      result.errors.push_back(spec.name + ": " + e.what());
    }
    if (outcome.record && cfg.emit.trace_csv) {
      const auto path = cfg.output_dir / (spec.name + "_trace.csv");
      write_file_atomic(path, trace_csv(*outcome.record));
      result.files.push_back(path);
    }
    result.outcomes.push_back(std::move(outcome));
  }

  if (cfg.emit.landscape_grid) {
    try {
      auto [t1, t2] = cfg.landscape.theta1
                          ? std::pair{*cfg.landscape.theta1, *cfg.landscape.theta2}
                          : default_window(opt.gain, seed, cfg.landscape.steps);
      const LandscapeGrid grid = landscape(prob, t1, t2);
      const auto path = cfg.output_dir / "landscape.csv";
      write_file_atomic(path, landscape_csv(grid));
      result.files.push_back(path);
      for (const auto& o : result.outcomes) {
        if (!o.record) continue;
        const auto p = cfg.output_dir / (o.name + "_path.csv");
        write_file_atomic(p, path_csv(*o.record));
        result.files.push_back(p);
      }
    } catch (const Error& e) {
      result.errors.push_back(std::string("landscape: ") + e.what());
    }
  }

  if (cfg.emit.summary) {
    json summary;
    summary["problem"] = kind_name(cfg.problem.kind);
    summary["n"] = prob.n();
    summary["m"] = prob.m();
    summary["gamma"] = prob.gamma;
    summary["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    summary["J_star"] = (opt.value.P * prob.Sigma_0).trace() + opt.value.q;
    summary["K_star"] = matrix_json(opt.gain.K());
    summary["K_0"] = matrix_json(seed.K());
    json methods = json::array();
    for (const auto& o : result.outcomes) {
      json m;
      m["name"] = o.name;
      if (!o.record) {
        m["status"] = "error";
        m["message"] = o.error;
        methods.push_back(m);
        continue;
      }
      const RunRecord& r = *o.record;
      const IterationRecord& last = r.iterations.back();
      m["method"] = std::string(to_string(r.method));
      m["status"] = std::string(to_string(r.status));
      m["message"] = r.message;
      m["iterations"] = last.k;
      m["final_J"] = finite_or_null(last.J);
      m["final_grad_norm"] = finite_or_null(last.grad_norm);
      m["final_gain_error"] = finite_or_null(last.gain_error);
      const auto hit = r.iterations_to(1e-8);
      m["iterations_to_gain_error_1e-8"] = hit ? json(*hit) : json(nullptr);
      methods.push_back(m);
    }
    summary["methods"] = methods;
    summary["errors"] = result.errors;
    const auto path = cfg.output_dir / "summary.json";
    write_file_atomic(path, summary.dump(2) + "\n");
    result.files.push_back(path);
  }
  return result;
}

} // namespace lqrpg
