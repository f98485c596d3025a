#include "metanet/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metanet/error.hpp"

namespace metanet {

using nlohmann::json;

const char* to_string(VmClass c) {
  switch (c) {
    case VmClass::SmallVM: return "SmallVM";
    case VmClass::MediumVM: return "MediumVM";
    case VmClass::LargeVM: return "LargeVM";
  }
  return "SmallVM";
}

VmClass vm_class_from_string(const std::string& s) {
  if (s == "SmallVM") return VmClass::SmallVM;
  if (s == "MediumVM") return VmClass::MediumVM;
  if (s == "LargeVM") return VmClass::LargeVM;
  throw MetaError(ErrorKind::Configuration, "unknown vm_class: " + s);
}

double SimConfig::lambda_at(int interval) const {
  double l = lambda;
  for (const auto& phase : workload_schedule)
    if (phase.start_interval <= interval) l = phase.lambda;
  return l;
}

const std::vector<double>* SimConfig::weights_at(int interval) const {
  const std::vector<double>* w = nullptr;
  for (const auto& phase : workload_schedule)
    if (phase.start_interval <= interval && !phase.profile_weights.empty())
      w = &phase.profile_weights;
  return w;
}

double PolicySetConfig::omega_scale(const std::string& name) const {
  auto it = omega_scales.find(name);
  if (it == omega_scales.end())
    throw MetaError(ErrorKind::Configuration, "no omega scale for policy: " + name);
  return it->second;
}

int PolicySetConfig::index_of(const std::string& name) const {
  for (size_t i = 0; i < roster.size(); ++i)
    if (roster[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<HostSpec> make_fleet(int small, int medium, int large) {
  // Azure-B-series-like classes: 2c/4GB, 4c/16GB, 8c/32GB.
  const HostSpec kSmall{0, VmClass::SmallVM, 2, 4.0, 0.0416, 75.0, 150.0};
  const HostSpec kMedium{0, VmClass::MediumVM, 4, 16.0, 0.166, 120.0, 250.0};
  const HostSpec kLarge{0, VmClass::LargeVM, 8, 32.0, 0.333, 180.0, 380.0};
  std::vector<HostSpec> fleet;
  int id = 0;
  for (int i = 0; i < small; ++i) { auto h = kSmall; h.host_id = id++; fleet.push_back(h); }
  for (int i = 0; i < medium; ++i) { auto h = kMedium; h.host_id = id++; fleet.push_back(h); }
  for (int i = 0; i < large; ++i) { auto h = kLarge; h.host_id = id++; fleet.push_back(h); }
  return fleet;
}

static std::vector<AppProfile> default_profiles() {
  // 3 heavy, 4 light; resource envelopes are config defaults.
  auto mk = [](std::string name, double c0, double c1, double w0, double w1,
               double r0, double r1, double sla) {
    AppProfile p;
    p.name = std::move(name);
    p.cpu_demand = {c0, c1};
    p.total_work = {w0, w1};
    p.ram_demand = {r0, r1};
    p.disk_demand = {0.01, 0.04};
    p.sla_deadline = sla;
    return p;
  };
  return {
      mk("heavy_a", 1.4, 2.0, 40.0, 80.0, 2.0, 4.0, 60.0),
      mk("heavy_b", 1.2, 1.8, 35.0, 70.0, 2.0, 3.5, 60.0),
      mk("heavy_c", 1.2, 2.0, 45.0, 85.0, 2.5, 4.0, 70.0),
      mk("light_a", 0.4, 0.8, 8.0, 20.0, 0.5, 1.0, 30.0),
      mk("light_b", 0.4, 1.0, 10.0, 25.0, 0.5, 1.5, 30.0),
      mk("light_c", 0.5, 0.9, 8.0, 18.0, 0.5, 1.0, 25.0),
      mk("light_d", 0.3, 0.7, 6.0, 15.0, 0.4, 0.8, 25.0),
  };
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.sim.fleet = make_fleet(6, 2, 2);
  cfg.sim.app_profiles = default_profiles();
  return cfg;
}

// ---- JSON (de)serialization -------------------------------------------------

static json host_to_json(const HostSpec& h) {
  return json{{"host_id", h.host_id},
              {"vm_class", to_string(h.vm_class)},
              {"cpu_cores", h.cpu_cores},
              {"ram_gb", h.ram_gb},
              {"price_per_hour", h.price_per_hour},
              {"power_idle", h.power_idle},
              {"power_peak", h.power_peak}};
}

static HostSpec host_from_json(const json& j, int fallback_id) {
  HostSpec h;
  h.host_id = j.value("host_id", fallback_id);
  h.vm_class = vm_class_from_string(j.value("vm_class", std::string("SmallVM")));
  h.cpu_cores = j.value("cpu_cores", 2);
  h.ram_gb = j.value("ram_gb", 4.0);
  h.price_per_hour = j.value("price_per_hour", 0.0416);
  h.power_idle = j.value("power_idle", 75.0);
  h.power_peak = j.value("power_peak", 150.0);
  return h;
}

static json profile_to_json(const AppProfile& p) {
  return json{{"name", p.name},
              {"cpu_demand", p.cpu_demand},
              {"total_work", p.total_work},
              {"ram_demand", p.ram_demand},
              {"disk_demand", p.disk_demand},
              {"sla_deadline", p.sla_deadline}};
}

static AppProfile profile_from_json(const json& j) {
  AppProfile p;
  p.name = j.value("name", std::string("app"));
  if (j.contains("cpu_demand")) p.cpu_demand = j.at("cpu_demand").get<std::array<double, 2>>();
  if (j.contains("total_work")) p.total_work = j.at("total_work").get<std::array<double, 2>>();
  if (j.contains("ram_demand")) p.ram_demand = j.at("ram_demand").get<std::array<double, 2>>();
  if (j.contains("disk_demand")) p.disk_demand = j.at("disk_demand").get<std::array<double, 2>>();
  p.sla_deadline = j.value("sla_deadline", 30.0);
  return p;
}

static json sim_to_json(const SimConfig& s) {
  json fleet = json::array();
  for (const auto& h : s.fleet) fleet.push_back(host_to_json(h));
  json profiles = json::array();
  for (const auto& p : s.app_profiles) profiles.push_back(profile_to_json(p));
  json schedule = json::array();
  for (const auto& ph : s.workload_schedule)
    schedule.push_back(json{{"start_interval", ph.start_interval},
                            {"lambda", ph.lambda},
                            {"profile_weights", ph.profile_weights}});
  return json{{"delta_seconds", s.delta_seconds},
              {"lambda", s.lambda},
              {"history_window", s.history_window},
              {"fleet", fleet},
              {"faas",
               {{"mem_gb", s.faas.mem_gb},
                {"price_per_gb_second", s.faas.price_per_gb_second},
                {"per_invocation_fee", s.faas.per_invocation_fee}}},
              {"migration",
               {{"allow", s.migration.allow},
                {"pause_intervals", s.migration.pause_intervals}}},
              {"app_profiles", profiles},
              {"workload_schedule", schedule}};
}

static SimConfig sim_from_json(const json& j) {
  SimConfig s;
  s.delta_seconds = j.value("delta_seconds", 10.0);
  s.lambda = j.value("lambda", 1.2);
  s.history_window = j.value("history_window", 4);
  if (j.contains("fleet_counts")) {
    const auto& c = j.at("fleet_counts");
    s.fleet = make_fleet(c.value("small", 6), c.value("medium", 2), c.value("large", 2));
  } else if (j.contains("fleet")) {
    int id = 0;
    for (const auto& hj : j.at("fleet")) s.fleet.push_back(host_from_json(hj, id++));
  } else {
    s.fleet = make_fleet(6, 2, 2);
  }
  if (j.contains("faas")) {
    const auto& f = j.at("faas");
    s.faas.mem_gb = f.value("mem_gb", 1.0);
    s.faas.price_per_gb_second = f.value("price_per_gb_second", 1.6667e-5);
    s.faas.per_invocation_fee = f.value("per_invocation_fee", 2.0e-7);
  }
  if (j.contains("migration")) {
    const auto& m = j.at("migration");
    s.migration.allow = m.value("allow", true);
    s.migration.pause_intervals = m.value("pause_intervals", 1);
  }
  if (j.contains("app_profiles")) {
    for (const auto& pj : j.at("app_profiles")) s.app_profiles.push_back(profile_from_json(pj));
  } else {
    s.app_profiles = default_profiles();
  }
  if (j.contains("workload_schedule")) {
    for (const auto& pj : j.at("workload_schedule")) {
      WorkloadPhase ph;
      ph.start_interval = pj.value("start_interval", 1);
      ph.lambda = pj.value("lambda", s.lambda);
      if (pj.contains("profile_weights"))
        ph.profile_weights = pj.at("profile_weights").get<std::vector<double>>();
      s.workload_schedule.push_back(ph);
    }
  }
  return s;
}

static json policies_to_json(const PolicySetConfig& p) {
  return json{{"roster", p.roster},
              {"util_cap", p.util_cap},
              {"objective",
               {{"w_util", p.objective.w_util},
                {"w_hosts", p.objective.w_hosts},
                {"w_migration", p.objective.w_migration}}},
              {"aco",
               {{"n_ants", p.aco.n_ants},
                {"n_iters", p.aco.n_iters},
                {"evaporation", p.aco.evaporation},
                {"alpha", p.aco.alpha},
                {"beta", p.aco.beta}}},
              {"ar_order", p.ar_order},
              {"ema_gamma", p.ema_gamma},
              {"local_search", {{"restarts", p.ls_restarts}, {"iters", p.ls_iters}}},
              {"gradient", {{"steps", p.grad_steps}, {"lr", p.grad_lr}}},
              {"second_order",
               {{"steps", p.so_steps},
                {"lr", p.so_lr},
                {"beta1", p.so_beta1},
                {"beta2", p.so_beta2}}},
              {"omega_scales", p.omega_scales}};
}

static PolicySetConfig policies_from_json(const json& j) {
  PolicySetConfig p;
  if (j.contains("roster")) p.roster = j.at("roster").get<std::vector<std::string>>();
  p.util_cap = j.value("util_cap", 0.8);
  if (j.contains("objective")) {
    const auto& o = j.at("objective");
    p.objective.w_util = o.value("w_util", 1.0);
    p.objective.w_hosts = o.value("w_hosts", 0.25);
    p.objective.w_migration = o.value("w_migration", 0.1);
  }
  if (j.contains("aco")) {
    const auto& a = j.at("aco");
    p.aco.n_ants = a.value("n_ants", 8);
    p.aco.n_iters = a.value("n_iters", 15);
    p.aco.evaporation = a.value("evaporation", 0.3);
    p.aco.alpha = a.value("alpha", 1.0);
    p.aco.beta = a.value("beta", 2.0);
  }
  p.ar_order = j.value("ar_order", 2);
  p.ema_gamma = j.value("ema_gamma", 0.5);
  if (j.contains("local_search")) {
    p.ls_restarts = j.at("local_search").value("restarts", 4);
    p.ls_iters = j.at("local_search").value("iters", 40);
  }
  if (j.contains("gradient")) {
    p.grad_steps = j.at("gradient").value("steps", 40);
    p.grad_lr = j.at("gradient").value("lr", 0.3);
  }
  if (j.contains("second_order")) {
    const auto& so = j.at("second_order");
    p.so_steps = so.value("steps", 40);
    p.so_lr = so.value("lr", 0.3);
    p.so_beta1 = so.value("beta1", 0.9);
    p.so_beta2 = so.value("beta2", 0.999);
  }
  if (j.contains("omega_scales"))
    for (auto it = j.at("omega_scales").begin(); it != j.at("omega_scales").end(); ++it)
      p.omega_scales[it.key()] = it.value().get<double>();
  return p;
}

static json surrogate_to_json(const SurrogateConfig& s) {
  return json{{"hidden", s.hidden},       {"lr", s.lr},
              {"momentum", s.momentum},   {"batch_size", s.batch_size},
              {"epochs", s.epochs},       {"lr_online", s.lr_online},
              {"q_heads", s.q_heads}};
}

static SurrogateConfig surrogate_from_json(const json& j) {
  SurrogateConfig s;
  if (j.contains("hidden")) s.hidden = j.at("hidden").get<std::vector<int>>();
  s.lr = j.value("lr", 1e-3);
  s.momentum = j.value("momentum", 0.9);
  s.batch_size = j.value("batch_size", 32);
  s.epochs = j.value("epochs", 200);
  s.lr_online = j.value("lr_online", 1e-3);
  s.q_heads = j.value("q_heads", false);
  return s;
}

static json selector_to_json(const SelectorConfig& s) {
  return json{{"kind", s.kind},
              {"fixed_policy", s.fixed_policy},
              {"omega_scale", s.omega_scale},
              {"mab", {{"c", s.mab.c}}},
              {"dqn",
               {{"gamma", s.dqn.gamma},
                {"eps_start", s.dqn.eps_start},
                {"eps_end", s.dqn.eps_end},
                {"eps_decay", s.dqn.eps_decay},
                {"buffer_capacity", s.dqn.buffer_capacity},
                {"batch_size", s.dqn.batch_size},
                {"sync_period", s.dqn.sync_period},
                {"lr", s.dqn.lr},
                {"pretrain_epochs", s.dqn.pretrain_epochs}}}};
}

static SelectorConfig selector_from_json(const json& j) {
  SelectorConfig s;
  s.kind = j.value("kind", std::string("metanet"));
  s.fixed_policy = j.value("fixed_policy", std::string());
  s.omega_scale = j.value("omega_scale", 5e-7);
  if (j.contains("mab")) s.mab.c = j.at("mab").value("c", 0.5);
  if (j.contains("dqn")) {
    const auto& d = j.at("dqn");
    s.dqn.gamma = d.value("gamma", 0.9);
    s.dqn.eps_start = d.value("eps_start", 0.2);
    s.dqn.eps_end = d.value("eps_end", 0.02);
    s.dqn.eps_decay = d.value("eps_decay", 200.0);
    s.dqn.buffer_capacity = d.value("buffer_capacity", 2000);
    s.dqn.batch_size = d.value("batch_size", 32);
    s.dqn.sync_period = d.value("sync_period", 50);
    s.dqn.lr = d.value("lr", 1e-3);
    s.dqn.pretrain_epochs = d.value("pretrain_epochs", 3);
  }
  return s;
}

static json synthetic_to_json(const SyntheticConfig& s) {
  json segments = json::array();
  for (const auto& seg : s.segments)
    segments.push_back(json{{"start", seg.start},
                            {"slope", seg.slope},
                            {"intercept", seg.intercept}});
  return json{{"enabled", s.enabled},
              {"fleet_hosts", s.fleet_hosts},
              {"load",
               {{"base", s.load.base},
                {"amplitude", s.load.amplitude},
                {"period", s.load.period}}},
              {"noise_level", s.noise_level},
              {"cost_scale", s.cost_scale},
              {"segments", segments}};
}

static SyntheticConfig synthetic_from_json(const json& j) {
  SyntheticConfig s;
  s.enabled = j.value("enabled", false);
  s.fleet_hosts = j.value("fleet_hosts", 2);
  if (j.contains("load")) {
    const auto& l = j.at("load");
    s.load.base = l.value("base", 0.5);
    s.load.amplitude = l.value("amplitude", 0.3);
    s.load.period = l.value("period", 250);
  }
  s.noise_level = j.value("noise_level", 0.05);
  s.cost_scale = j.value("cost_scale", 0.5);
  if (j.contains("segments")) {
    for (const auto& sj : j.at("segments")) {
      RegimeSegment seg;
      seg.start = sj.value("start", 1);
      if (sj.contains("slope")) seg.slope = sj.at("slope").get<std::vector<double>>();
      if (sj.contains("intercept"))
        seg.intercept = sj.at("intercept").get<std::vector<double>>();
      s.segments.push_back(seg);
    }
  }
  return s;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j{{"seed", cfg.seed},
         {"simulator", sim_to_json(cfg.sim)},
         {"policies", policies_to_json(cfg.policies)},
         {"surrogate", surrogate_to_json(cfg.surrogate)},
         {"selector", selector_to_json(cfg.selector)},
         {"collect", {{"gamma", cfg.collect_gamma}}},
         {"evaluate", {{"T", cfg.evaluate_T}}},
         {"synthetic", synthetic_to_json(cfg.synthetic)}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MetaError(ErrorKind::Configuration, std::string("bad config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", 42ULL);
  cfg.sim = j.contains("simulator") ? sim_from_json(j.at("simulator")) : default_config().sim;
  cfg.policies = j.contains("policies") ? policies_from_json(j.at("policies")) : PolicySetConfig{};
  cfg.surrogate = j.contains("surrogate") ? surrogate_from_json(j.at("surrogate")) : SurrogateConfig{};
  cfg.selector = j.contains("selector") ? selector_from_json(j.at("selector")) : SelectorConfig{};
  if (j.contains("collect")) cfg.collect_gamma = j.at("collect").value("gamma", 100);
  if (j.contains("evaluate")) cfg.evaluate_T = j.at("evaluate").value("T", 1000);
  if (j.contains("synthetic")) cfg.synthetic = synthetic_from_json(j.at("synthetic"));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MetaError(ErrorKind::Io, "cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetaError(ErrorKind::Io, "cannot write config: " + path);
  out << config_to_json(cfg) << '\n';
}

std::string sim_fingerprint(const ExperimentConfig& cfg) {
  return sim_to_json(cfg.sim).dump();
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw MetaError(ErrorKind::Configuration, msg);
  };
  if (cfg.sim.delta_seconds <= 0) fail("delta_seconds must be > 0");
  if (cfg.sim.lambda < 0) fail("lambda must be >= 0");
  if (cfg.sim.history_window < 1) fail("history_window must be >= 1");
  for (const auto& h : cfg.sim.fleet) {
    if (h.cpu_cores <= 0) fail("host cpu_cores must be > 0");
    if (h.ram_gb <= 0) fail("host ram_gb must be > 0");
    if (h.power_idle < 0 || h.power_idle > h.power_peak)
      fail("host power must satisfy 0 <= idle <= peak");
    if (h.price_per_hour < 0) fail("host price_per_hour must be >= 0");
  }
  if (cfg.sim.app_profiles.empty()) fail("at least one app profile required");
  for (const auto& p : cfg.sim.app_profiles) {
    if (p.cpu_demand[0] <= 0 || p.cpu_demand[1] < p.cpu_demand[0])
      fail("profile cpu_demand range invalid: " + p.name);
    if (p.total_work[0] <= 0 || p.total_work[1] < p.total_work[0])
      fail("profile total_work range invalid: " + p.name);
    if (p.sla_deadline <= 0) fail("profile sla_deadline must be > 0: " + p.name);
  }
  if (cfg.policies.roster.empty()) fail("policy roster must be nonempty");
  for (size_t i = 0; i < cfg.policies.roster.size(); ++i)
    for (size_t k = i + 1; k < cfg.policies.roster.size(); ++k)
      if (cfg.policies.roster[i] == cfg.policies.roster[k])
        fail("duplicate roster entry: " + cfg.policies.roster[i]);
  const auto& aco = cfg.policies.aco;
  if (aco.n_ants < 1 || aco.n_iters < 1) fail("aco n_ants and n_iters must be >= 1");
  if (aco.evaporation <= 0 || aco.evaporation >= 1) fail("aco evaporation must be in (0,1)");
  if (cfg.surrogate.lr < 0 || cfg.surrogate.batch_size < 1 || cfg.surrogate.epochs < 0)
    fail("surrogate hyperparameters invalid");
  if (cfg.surrogate.momentum < 0 || cfg.surrogate.momentum >= 1)
    fail("surrogate momentum must be in [0,1)");
  if (cfg.policies.ema_gamma <= 0 || cfg.policies.ema_gamma > 1)
    fail("ema_gamma must be in (0,1]");
  if (cfg.collect_gamma < 1) fail("collect.gamma must be >= 1");
  if (cfg.evaluate_T < 1) fail("evaluate.T must be >= 1");
  const auto& dqn = cfg.selector.dqn;
  if (dqn.gamma < 0 || dqn.gamma >= 1) fail("dqn gamma must be in [0,1)");
  if (dqn.eps_start < 0 || dqn.eps_start > 1 || dqn.eps_end < 0 || dqn.eps_end > 1)
    fail("dqn epsilon bounds must be in [0,1]");
  if (cfg.synthetic.enabled) {
    if (cfg.synthetic.segments.empty()) fail("synthetic mode needs >= 1 regime segment");
    int prev = 0;
    const int q = cfg.policies.q();
    for (const auto& seg : cfg.synthetic.segments) {
      if (seg.start <= prev) fail("synthetic segment starts must be strictly increasing");
      prev = seg.start;
      if (static_cast<int>(seg.slope.size()) != q ||
          static_cast<int>(seg.intercept.size()) != q)
        fail("synthetic segment slope/intercept must have one entry per policy");
    }
    if (cfg.synthetic.noise_level < 0) fail("synthetic noise_level must be >= 0");
    if (cfg.synthetic.fleet_hosts < 1) fail("synthetic fleet_hosts must be >= 1");
  }
}

}  // namespace metanet
