#include "boxcorner/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "boxcorner/error.hpp"

namespace bc::io {

namespace {

int ipow(int p, int n) {
  long long v = 1;
  for (int i = 0; i < n; ++i) {
    v *= p;
    require(v <= 1024, "group too large (N <= 1024)");
  }
  return static_cast<int>(v);
}

std::pair<int, int> space_of(const Json& j) {
  require(j.contains("space") && j["space"].is_string(), "missing \"space\" (\"p^n\")");
  return parse_space(j["space"].get<std::string>());
}

std::string space_str(const Group& H) {
  return std::to_string(H.p()) + "^" + std::to_string(H.n());
}

std::vector<int> point_of(const Json& v, int arity, int N) {
  require(v.is_array() && static_cast<int>(v.size()) == arity,
          "each point needs " + std::to_string(arity) + " coordinates");
  std::vector<int> pt;
  for (auto& c : v) {
    require(c.is_number_integer(), "coordinates must be integers");
    int x = c.get<int>();
    require(x >= 0 && x < N, "coordinate out of range");
    pt.push_back(x);
  }
  return pt;
}

Json points_json(const Bits& B, int arity, int N) {
  Json a = Json::array();
  B.for_each([&](std::size_t i) {
    Json p = Json::array();
    std::vector<int> c(arity);
    for (int r = arity - 1; r >= 0; --r) {
      c[r] = static_cast<int>(i % N);
      i /= N;
    }
    for (int x : c) p.push_back(x);
    a.push_back(p);
  });
  return a;
}

Bits points_bits(const Json& a, int arity, int N) {
  require(a.is_array(), "point list must be an array");
  std::size_t size = 1;
  for (int r = 0; r < arity; ++r) size *= N;
  Bits B(size);
  for (auto& v : a) {
    auto pt = point_of(v, arity, N);
    std::size_t i = 0;
    for (int x : pt) i = i * N + x;
    B.set(i);
  }
  return B;
}

// numeric field with type check
template <class T>
void take(const Json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  if constexpr (std::is_same_v<T, bool>) {
    require(v.is_boolean(), std::string("config key ") + key + " must be a boolean");
    field = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    require(v.is_number_integer(), std::string("config key ") + key + " must be an integer");
    field = v.get<T>();
  } else {
    require(v.is_number(), std::string("config key ") + key + " must be a number");
    field = v.get<T>();
  }
}

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto& [k, v] : j.items())
    require(ok.count(k), "unknown key \"" + k + "\" in " + where);
}

template <std::size_t K>
Json arr(const std::array<double, K>& a, std::size_t from = 0) {
  Json r = Json::array();
  for (std::size_t i = from; i < K; ++i) r.push_back(a[i]);
  return r;
}

template <std::size_t K>
void from_arr(const Json& j, std::array<double, K>& a, std::size_t from = 0) {
  for (std::size_t i = from; i < K; ++i) a[i] = j.at(i - from).get<double>();
}

Json monitors_json(const std::vector<MonitorLog>& ms) {
  Json a = Json::array();
  for (auto& m : ms) a.push_back({{"name", m.name}, {"count", m.count}, {"cap", m.cap}});
  return a;
}

}  // namespace

// ---- sets ------------------------------------------------------------------------------

int SetData::N() const { return ipow(p, n); }

std::size_t SetData::index(const std::vector<int>& pt) const {
  std::size_t i = 0;
  for (int x : pt) i = i * N() + x;
  return i;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(path + ": " + e.what());
  }
}

SetData parse_set(const std::string& text) {
  SetData s;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw PreconditionError(std::string("set file: ") + e.what());
    }
    only_keys(j, {"space", "arity", "points"}, "set file");
    std::tie(s.p, s.n) = space_of(j);
    take(j, "arity", s.arity);
    require(s.arity >= 1 && s.arity <= 3, "arity must be 1, 2 or 3");
    s.A = points_bits(j.value("points", Json::array()), s.arity, s.N());
    return s;
  }
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::vector<long long> v;
    long long x;
    while (ls >> x) v.push_back(x);
    std::string rest;
    ls.clear();
    if (ls >> rest) throw PreconditionError("set file line " + std::to_string(lineno) + ": not a number");
    if (v.empty()) continue;
    if (!header) {
      require(v.size() == 3, "set file header must be \"p n arity\"");
      s.p = static_cast<int>(v[0]);
      s.n = static_cast<int>(v[1]);
      s.arity = static_cast<int>(v[2]);
      require(is_prime(s.p) && s.n >= 1, "set file: p must be prime and n >= 1");
      require(s.arity >= 1 && s.arity <= 3, "arity must be 1, 2 or 3");
      std::size_t size = 1;
      for (int r = 0; r < s.arity; ++r) size *= s.N();
      s.A = Bits(size);
      header = true;
      continue;
    }
    require(static_cast<int>(v.size()) == s.arity,
            "set file line " + std::to_string(lineno) + ": expected " + std::to_string(s.arity) +
                " coordinates");
    std::vector<int> pt;
    for (auto c : v) {
      require(c >= 0 && c < s.N(), "set file line " + std::to_string(lineno) + ": out of range");
      pt.push_back(static_cast<int>(c));
    }
    s.A.set(s.index(pt));
  }
  require(header, "set file has no header");
  return s;
}

SetData read_set(const std::string& path) { return parse_set(read_text(path)); }

std::string format_set(const SetData& s) {
  std::ostringstream os;
  os << s.p << " " << s.n << " " << s.arity << "\n";
  int N = s.N();
  s.A.for_each([&](std::size_t i) {
    std::vector<int> c(s.arity);
    for (int r = s.arity - 1; r >= 0; --r) {
      c[r] = static_cast<int>(i % N);
      i /= N;
    }
    for (int r = 0; r < s.arity; ++r) os << (r ? " " : "") << c[r];
    os << "\n";
  });
  return os.str();
}

Json set_to_json(const SetData& s) {
  return {{"space", std::to_string(s.p) + "^" + std::to_string(s.n)},
          {"arity", s.arity},
          {"points", points_json(s.A, s.arity, s.N())}};
}

std::shared_ptr<const Cube> make_cube(int p, int n) {
  return std::make_shared<const Cube>(Group::field(p, n));
}

// ---- systems --------------------------------------------------------------------------

CornerSystem system_from_json(const Json& j) {
  only_keys(j, {"space", "S", "R", "T", "A"}, "system file");
  auto [p, n] = space_of(j);
  auto cube = make_cube(p, n);
  int N = cube->N();
  std::array<Bits, 5> S;
  for (int i = 1; i <= 4; ++i) {
    auto key = std::to_string(i);
    if (j.contains("S") && j["S"].contains(key)) {
      S[i] = Bits(N);
      for (auto& v : j["S"][key]) {
        require(v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() < N,
                "S_" + key + " has a bad element");
        S[i].set(v.get<int>());
      }
    } else {
      S[i] = Bits(N, true);
    }
  }
  if (j.contains("S"))
    for (auto& [k, v] : j["S"].items())
      require(k.size() == 1 && k[0] >= '1' && k[0] <= '4', "S keys are \"1\"..\"4\"");
  std::array<Bits, 6> R;
  for (int s = 0; s < 6; ++s) {
    auto [a, b] = slot_pair(s);
    auto key = std::to_string(a) + std::to_string(b);
    if (j.contains("R") && j["R"].contains(key)) {
      R[s] = points_bits(j["R"][key], 2, N);
    } else {
      R[s] = Bits(static_cast<std::size_t>(N) * N);
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
          if (S[a][x] && S[b][y]) R[s].set(static_cast<std::size_t>(x) * N + y);
    }
  }
  if (j.contains("R"))
    for (auto& [k, v] : j["R"].items()) {
      bool ok = k.size() == 2 && k[0] >= '1' && k[1] <= '4' && k[0] < k[1];
      require(ok, "R keys are \"12\", \"13\", \"14\", \"23\", \"24\", \"34\"");
    }
  CornerSystem cs;
  if (j.contains("T")) {
    Bits T = points_bits(j["T"], 3, N);
    cs.sys = TSystem::build(cube, S, R, &T);
  } else {
    cs.sys = TSystem::build(cube, S, R);
  }
  cs.A = j.contains("A") ? points_bits(j["A"], 3, N) : Bits(cube->size());
  cs.validate();
  return cs;
}

CornerSystem read_system(const std::string& path) { return system_from_json(read_json(path)); }

Json system_to_json(const CornerSystem& cs) {
  const TSystem& sys = cs.sys;
  int N = sys.N();
  Json S = Json::object(), R = Json::object();
  for (int i = 1; i <= 4; ++i) {
    Json a = Json::array();
    sys.S[i].for_each([&](std::size_t x) { a.push_back(static_cast<int>(x)); });
    S[std::to_string(i)] = a;
  }
  for (int s = 0; s < 6; ++s) {
    auto [a, b] = slot_pair(s);
    R[std::to_string(a) + std::to_string(b)] = points_json(sys.R[s], 2, N);
  }
  return {{"space", space_str(sys.cube->H())},
          {"S", S},
          {"R", R},
          {"T", points_json(sys.T, 3, N)},
          {"A", points_json(cs.A, 3, N)}};
}

// ---- config --------------------------------------------------------------------------

PipelineConfig config_from_json(const Json& j) {
  only_keys(j,
            {"space", "kappa", "admiss_C", "admiss_kappa", "upsilon", "max_iterations", "uniformize",
             "seed", "increment", "uniformizer"},
            "config");
  PipelineConfig c;
  if (j.contains("space")) std::tie(c.p, c.n) = space_of(j);
  take(j, "kappa", c.kappa);
  take(j, "admiss_C", c.admiss_C);
  take(j, "admiss_kappa", c.admiss_kappa);
  take(j, "upsilon", c.upsilon);
  take(j, "max_iterations", c.max_iterations);
  take(j, "uniformize", c.uniformize);
  take(j, "seed", c.seed);
  if (j.contains("increment")) {
    const Json& i = j["increment"];
    only_keys(i,
              {"c1", "t1", "c2", "t2", "c", "p", "K", "C", "theta1", "theta2", "min_fraction",
               "kappa_prime", "enforce_uniform_V", "uniform_theta", "anchor_limit", "anchor_samples",
               "seed"},
              "config.increment");
    auto& k = c.inc;
    take(i, "c1", k.c1);
    take(i, "t1", k.t1);
    take(i, "c2", k.c2);
    take(i, "t2", k.t2);
    take(i, "c", k.c);
    take(i, "p", k.p);
    take(i, "K", k.K);
    take(i, "C", k.C);
    take(i, "theta1", k.theta1);
    take(i, "theta2", k.theta2);
    take(i, "min_fraction", k.min_fraction);
    take(i, "kappa_prime", k.kappa_prime);
    take(i, "enforce_uniform_V", k.enforce_uniform_V);
    take(i, "uniform_theta", k.uniform_theta);
    take(i, "anchor_limit", k.anchor_limit);
    take(i, "anchor_samples", k.anchor_samples);
    take(i, "seed", k.seed);
  }
  if (j.contains("uniformizer")) {
    const Json& u = j["uniformizer"];
    only_keys(u,
              {"u2", "u3", "tau", "C1", "C2", "codim_budget", "max_codim", "max_rounds", "bpz_c",
               "bpz_t", "admiss_C", "admiss_kappa", "cT", "CT"},
              "config.uniformizer");
    auto& k = c.uni;
    take(u, "u2", k.u2);
    take(u, "u3", k.u3);
    take(u, "tau", k.tau);
    take(u, "C1", k.C1);
    take(u, "C2", k.C2);
    take(u, "codim_budget", k.codim_budget);
    take(u, "max_codim", k.max_codim);
    take(u, "max_rounds", k.max_rounds);
    take(u, "bpz_c", k.bpz.c);
    take(u, "bpz_t", k.bpz.t);
    take(u, "admiss_C", k.admiss_C);
    take(u, "admiss_kappa", k.admiss_kappa);
    take(u, "cT", k.cT);
    take(u, "CT", k.CT);
  }
  c.uni.inc = c.inc;
  c.validate();
  return c;
}

PipelineConfig read_config(const std::string& path) { return config_from_json(read_json(path)); }

Json config_to_json(const PipelineConfig& c) {
  const auto& k = c.inc;
  const auto& u = c.uni;
  return {{"space", std::to_string(c.p) + "^" + std::to_string(c.n)},
          {"kappa", c.kappa},
          {"admiss_C", c.admiss_C},
          {"admiss_kappa", c.admiss_kappa},
          {"upsilon", c.upsilon},
          {"max_iterations", c.max_iterations},
          {"uniformize", c.uniformize},
          {"seed", c.seed},
          {"increment",
           {{"c1", k.c1}, {"t1", k.t1}, {"c2", k.c2}, {"t2", k.t2}, {"c", k.c}, {"p", k.p},
            {"K", k.K}, {"C", k.C}, {"theta1", k.theta1}, {"theta2", k.theta2},
            {"min_fraction", k.min_fraction}, {"kappa_prime", k.kappa_prime},
            {"enforce_uniform_V", k.enforce_uniform_V}, {"uniform_theta", k.uniform_theta},
            {"anchor_limit", k.anchor_limit}, {"anchor_samples", k.anchor_samples},
            {"seed", k.seed}}},
          {"uniformizer",
           {{"u2", u.u2}, {"u3", u.u3}, {"tau", u.tau}, {"C1", u.C1}, {"C2", u.C2},
            {"codim_budget", u.codim_budget}, {"max_codim", u.max_codim},
            {"max_rounds", u.max_rounds}, {"bpz_c", u.bpz.c}, {"bpz_t", u.bpz.t},
            {"admiss_C", u.admiss_C}, {"admiss_kappa", u.admiss_kappa}, {"cT", u.cT},
            {"CT", u.CT}}}};
}

// ---- reports ---------------------------------------------------------------------------

Json to_json(const oracle::Exact& e) {
  Json j = {{"value", e.value}, {"exact", e.exact}};
  if (e.exact) j["rational"] = e.str();
  return j;
}

Json to_json(const CornerWitness& w) { return {{"g", w.g}, {"h", w.h}}; }

Json to_json(const Decision& d) {
  Json j = {{"outcome", outcome_name(d.outcome)},
            {"ell", d.ell},
            {"ratio", arr(d.ratio, 1)},
            {"uniform_bound", d.uniform_bound},
            {"size_lhs", d.size_lhs},
            {"size_rhs", d.size_rhs},
            {"admissible", d.admissible},
            {"admiss_failure", d.admiss_failure},
            {"theorem_regime", d.theorem_regime}};
  j["corner"] = d.corner ? to_json(*d.corner) : Json(nullptr);
  return j;
}

Json to_json(const AdmissReport& r) {
  Json cl = Json::array();
  for (auto& c : r.clauses)
    cl.push_back({{"name", c.name},
                  {"ratio", c.ratio},
                  {"bound", c.bound},
                  {"degenerate", c.degenerate},
                  {"pass", c.pass}});
  return {{"admissible", r.admissible},
          {"first_failure", r.first_failure},
          {"worst_excess", r.worst_excess},
          {"clauses", cl}};
}

Json to_json(const Densities& d) {
  return {{"d", arr(d.d, 1)}, {"djk", arr(d.djk)}, {"dT", arr(d.dT, 1)}, {"dA", d.dA}, {"pT", d.pT}};
}

Json to_json(const BpzResult& r) {
  return {{"delta", r.delta},       {"sigma", r.sigma},     {"p1", r.p1},
          {"p2", r.p2},             {"density", r.density}, {"floor", r.floor},
          {"size_ok", r.size_ok},   {"gain_ok", r.gain_ok}, {"anchor", r.anchor},
          {"c", r.constants.c},     {"t", r.constants.t},   {"X1_size", r.X1.count()},
          {"X2_size", r.X2.count()}};
}

Json to_json(const IncrementResult& r) {
  Json claims = Json::array();
  for (auto& c : r.claims)
    claims.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"holds", c.holds}});
  return {{"branch", r.branch},
          {"axis", r.axis},
          {"ell", r.ell},
          {"tau", r.tau},
          {"tau_required", r.tau_required},
          {"density_before", r.density_before},
          {"density_after", r.density_after},
          {"gain_bound", r.gain_bound},
          {"gain_ok", r.gain_ok},
          {"p_system", r.p_system},
          {"p_bound", r.p_bound},
          {"p_ok", r.p_ok},
          {"s1", arr(r.s1, 1)},
          {"s2", arr(r.s2, 1)},
          {"theta1", r.theta1},
          {"theta2", r.theta2},
          {"paper_theta1", r.paper_theta1},
          {"paper_theta2", r.paper_theta2},
          {"fiber_variance", r.fiber_variance},
          {"fiber_variance_bound", r.fiber_variance_bound},
          {"new_fraction", r.new_fraction},
          {"new_fraction_bound", r.new_fraction_bound},
          {"claims", claims},
          {"uniform_V_ratio", r.uniform_V_ratio},
          {"T_size", r.sys.T.count()},
          {"V_size", r.V.count()},
          {"notes", r.notes}};
}

Json to_json(const DensityIncrement& r) {
  return {{"delta", r.delta},         {"delta_after", r.delta_after}, {"kappa", r.kappa},
          {"floor", r.floor},         {"p_ok", r.p_ok},               {"gain_ok", r.gain_ok},
          {"increment", to_json(r.inc)}};
}

Json to_json(const UniformizeReport& r) {
  return {{"codim", r.codim},
          {"counters_before", r.counters_before},
          {"counters_after", r.counters_after},
          {"p_E2", arr(r.p_E2)},
          {"p_E3", arr(r.p_E3, 1)},
          {"p_E", r.p_E},
          {"p_B", r.p_B},
          {"p_F", arr(r.p_F, 1)},
          {"rounds", r.rounds},
          {"increments", r.increments},
          {"monitors", monitors_json(r.monitors)},
          {"partial", r.partial},
          {"pair_multi_ok", r.pair_multi_ok},
          {"pt_counter_kept", r.pt_counter_kept},
          {"events_ok", r.events_ok},
          {"atoms", r.ps.counter_PT()},
          {"notes", r.notes}};
}

Json to_json(const UniLemmaResult& r) {
  return {{"atom", r.atom},
          {"density", r.density},
          {"density_floor", r.density_floor},
          {"admissible", r.admissible},
          {"admiss_failure", r.admiss_failure},
          {"pT", r.pT},
          {"dim_before", r.dim_before},
          {"dim_after", r.dim_after},
          {"excluded_mass", r.excluded_mass},
          {"relaxed", r.relaxed},
          {"shift", {r.next.shift[1], r.next.shift[2], r.next.shift[3]}},
          {"basis", r.next.basis},
          {"report", to_json(r.report)},
          {"system", system_to_json(r.next.cs)}};
}

Json to_json(const oracle::MaxCornerFree& r) {
  return {{"N", r.N},
          {"d", r.d},
          {"size", r.size},
          {"exact", r.exact},
          {"nodes", r.nodes},
          {"witness_verified", r.witness_verified},
          {"witness", points_json(r.witness, r.d, r.N)}};
}

Json to_json(const oracle::RandomSetStats& r) {
  Json q = Json::array();
  for (auto [l, v] : r.quantiles) q.push_back({{"q", l}, {"value", v}});
  return {{"dims", r.dims}, {"density", r.density}, {"trials", r.trials}, {"mean", r.mean},
          {"quantiles", q}};
}

Json to_json(const IterationRecord& r) {
  return {{"m", r.m},
          {"dim", r.dim},
          {"dA", r.dA},
          {"pT", r.pT},
          {"A_size", r.A_size},
          {"d", arr(r.d, 1)},
          {"djk", arr(r.djk)},
          {"admissible", r.admissible},
          {"admiss_failure", r.admiss_failure},
          {"ratio", arr(r.ratio, 1)},
          {"uniform_bound", r.uniform_bound},
          {"size_lhs", r.size_lhs},
          {"size_rhs", r.size_rhs},
          {"outcome", r.outcome},
          {"ell", r.ell},
          {"branch", r.branch},
          {"dA_increment", r.dA_increment},
          {"dA_uniformize", r.dA_uniformize},
          {"codim", r.codim},
          {"monitors", monitors_json(r.monitors)},
          {"relaxations", r.relaxations}};
}

Json to_json(const PipelineTrace& t) {
  Json it = Json::array();
  for (auto& r : t.iterations) it.push_back(to_json(r));
  return {{"schema", "boxcorner.trace/1"},
          {"config", config_to_json(t.config)},
          {"space", t.space},
          {"A_size", t.A_size},
          {"density", t.density},
          {"iteration_cap", t.iteration_cap},
          {"iterations", it},
          {"terminal", t.terminal},
          {"corner", t.corner ? to_json(*t.corner) : Json(nullptr)},
          {"corner_verified", t.corner_verified},
          {"subset_ok", t.subset_ok},
          {"density_monotone", t.density_monotone},
          {"diagnostic", t.diagnostic}};
}

PipelineTrace trace_from_json(const Json& j) {
  require(j.value("schema", "") == "boxcorner.trace/1", "not a trace (schema boxcorner.trace/1)");
  try {
    PipelineTrace t;
    t.config = config_from_json(j.at("config"));
    t.space = j.at("space").get<std::string>();
    t.A_size = j.at("A_size").get<std::size_t>();
    t.density = j.at("density").get<double>();
    t.iteration_cap = j.at("iteration_cap").get<int>();
    for (auto& r : j.at("iterations")) {
      IterationRecord x;
      x.m = r.at("m").get<int>();
      x.dim = r.at("dim").get<int>();
      x.dA = r.at("dA").get<double>();
      x.pT = r.at("pT").get<double>();
      x.A_size = r.at("A_size").get<std::size_t>();
      from_arr(r.at("d"), x.d, 1);
      from_arr(r.at("djk"), x.djk);
      x.admissible = r.at("admissible").get<bool>();
      x.admiss_failure = r.at("admiss_failure").get<std::string>();
      from_arr(r.at("ratio"), x.ratio, 1);
      x.uniform_bound = r.at("uniform_bound").get<double>();
      x.size_lhs = r.at("size_lhs").get<double>();
      x.size_rhs = r.at("size_rhs").get<double>();
      x.outcome = r.at("outcome").get<std::string>();
      x.ell = r.at("ell").get<int>();
      x.branch = r.at("branch").get<int>();
      x.dA_increment = r.at("dA_increment").get<double>();
      x.dA_uniformize = r.at("dA_uniformize").get<double>();
      x.codim = r.at("codim").get<int>();
      for (auto& m : r.at("monitors"))
        x.monitors.push_back(
            {m.at("name").get<std::string>(), m.at("count").get<int>(), m.at("cap").get<int>()});
      x.relaxations = r.at("relaxations").get<std::vector<std::string>>();
      t.iterations.push_back(std::move(x));
    }
    t.terminal = j.at("terminal").get<std::string>();
    if (!j.at("corner").is_null()) {
      CornerWitness w;
      w.g = j["corner"].at("g").get<std::vector<int>>();
      w.h = j["corner"].at("h").get<int>();
      t.corner = w;
    }
    t.corner_verified = j.at("corner_verified").get<bool>();
    t.subset_ok = j.at("subset_ok").get<bool>();
    t.density_monotone = j.at("density_monotone").get<bool>();
    t.diagnostic = j.at("diagnostic").get<std::string>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed trace: ") + e.what());
  }
}

std::string trace_csv(const PipelineTrace& t) {
  std::ostringstream os;
  os.precision(12);
  os << "m,dim,A_size,dA,pT,admissible,ratio1,ratio2,ratio3,ratio4,uniform_bound,size_lhs,"
        "size_rhs,outcome,ell,branch,dA_increment,dA_uniformize,codim,relaxations\n";
  for (auto& r : t.iterations) {
    os << r.m << "," << r.dim << "," << r.A_size << "," << r.dA << "," << r.pT << ","
       << (r.admissible ? 1 : 0);
    for (int l = 1; l <= 4; ++l) os << "," << r.ratio[l];
    os << "," << r.uniform_bound << "," << r.size_lhs << "," << r.size_rhs << "," << r.outcome
       << "," << r.ell << "," << r.branch << "," << r.dA_increment << "," << r.dA_uniformize
       << "," << r.codim << "," << r.relaxations.size() << "\n";
  }
  return os.str();
}

}  // namespace bc::io
