#include "covert/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "covert/error.hpp"

namespace covert::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamRun = 0x72756e;      // "run"
constexpr std::uint64_t kStreamShared = 0x736872;   // "shr"
constexpr std::uint64_t kStreamChannel = 0x63686e;  // "chn"
constexpr std::uint64_t kStreamEve = 0x657665;      // "eve"
constexpr std::uint64_t kStreamMonitor = 0x6d6f6e;  // "mon"

// Reads one JSON object and remembers which keys were consumed so that
// leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& need(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(path(key) + " is required");
    return *v;
  }

  double number(const std::string& key) { return as_number(need(key), key); }

  std::optional<double> opt_number(const std::string& key) {
    const json* v = find(key);
    return v ? std::optional<double>(as_number(*v, key)) : std::nullopt;
  }

  std::optional<std::uint64_t> opt_count(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError(path(key) + " must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::optional<bool> opt_bool(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return v->get<bool>();
  }

  std::optional<std::string> opt_string(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(path(key) + " must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path(key));
    }
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key) + " must be finite");
    return x;
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (cfg.strict) throw ConfigError("seed is required in strict mode");
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json envelope(const RunConfig& cfg, const std::string& kind) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = kind;
  doc["config"] = config_to_json(cfg);
  return doc;
}

ProtocolParams obtain_params(const RunConfig& cfg, const std::optional<fs::path>& plan_file,
                             std::ostream& log) {
  if (plan_file) {
    std::ifstream in(*plan_file);
    if (!in) throw ConfigError("cannot open plan " + plan_file->string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("plan " + plan_file->string() + ": " + e.what());
    }
    if (!doc.contains("params")) throw ConfigError("plan document has no params");
    ProtocolParams p = params_from_json(doc.at("params"));
    if (p.b != Message(cfg.message).bit_count()) {
      throw ConfigError("plan was made for a different message length");
    }
    return p;
  }
  log << "planning " << (cfg.name.empty() ? cfg.message : cfg.name) << " inline\n";
  return plan(make_request(cfg)).params;
}

std::string plan_table(const RunConfig& cfg, const ProtocolParams& p) {
  std::ostringstream t;
  auto row = [&](const std::string& label, const std::string& value) {
    t << label << std::string(label.size() < 20 ? 20 - label.size() : 1, ' ') << value << '\n';
  };
  row("Message", cfg.message);
  row("Bits", std::to_string(p.b));
  row("Detection bias", fmt("%.4g", cfg.epsilon) + " (bound " + fmt("%.6g", p.predicted_epsilon) + ")");
  row("Decoding error", fmt("%.4g", cfg.target_error) + " (predicted " + fmt("%.6g", p.predicted_error) + ")");
  row("Repetition rate", fmt("%.6g", p.rep_rate_hz) + " Hz");
  row("Time-bins", fmt("%.4e", static_cast<double>(p.bins_total())));
  row("Mode pairs", std::to_string(p.n_pairs));
  row("Covert signals", std::to_string(p.d));
  row("Repetitions/bit", std::to_string(p.k));
  row("Send probability", fmt("%.6e", p.q));
  row("mu", fmt("%.4e", p.mu));
  row("n_A", fmt("%.4e", p.channel.noise_alice.n_bar));
  row("n_B", fmt("%.4e", p.channel.noise_bob.n_bar));
  row("tau", fmt("%.4g", p.channel.tau));
  row("p_C", fmt("%.6e", p.p_correct));
  row("p_W", fmt("%.6e", p.p_wrong));
  row("Running time (s)", fmt("%.6g", p.running_time_s));
  return t.str();
}

const char* outcome_name(ClickOutcome o) {
  switch (o) {
    case ClickOutcome::kNone: return "none";
    case ClickOutcome::kZeroBin: return "zero";
    case ClickOutcome::kOneBin: return "one";
    case ClickOutcome::kBoth: return "both";
  }
  return "?";
}

json stats_to_json(const TranscriptStats& s) {
  return json{{"d_prime", s.d_prime},
              {"signal_bin_clicks", s.signal_bin_clicks},
              {"wrong_bin_clicks", s.wrong_bin_clicks},
              {"double_clicks", s.double_clicks},
              {"clicked_pulses", s.clicked_pulses},
              {"votes", s.votes},
              {"wrong_votes", s.wrong_votes},
              {"bit_errors", s.bit_errors},
              {"signal_click_freq", s.signal_click_freq},
              {"noise_click_freq", s.noise_click_freq},
              {"pulse_click_freq", s.pulse_click_freq},
              {"clicks_per_bit", s.clicks_per_bit},
              {"error_rate", s.error_rate},
              {"bit_error_rate", s.bit_error_rate}};
}

json detector_to_json(const DetectorEstimate& d) {
  return json{{"p_false_alarm", d.p_false_alarm}, {"p_missed", d.p_missed},
              {"p_error", d.p_error},             {"std_error", d.std_error},
              {"h0_trials", d.h0_trials},         {"h1_trials", d.h1_trials}};
}

// Any of the library's argument checks surfacing here is a configuration
// problem from the caller's point of view.
template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InfeasibleError& e) {
    log << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader top(doc, "");
  if (auto v = top.opt_count("schema_version")) {
    require(*v == kSchemaVersion, "unsupported schema_version " + std::to_string(*v));
  }
  cfg.name = top.opt_string("name").value_or("");
  if (auto m = top.opt_string("message")) {
    cfg.message = *m;
  } else {
    throw ConfigError("message is required");
  }
  require(!cfg.message.empty(), "message must not be empty");
  try {
    (void)Message(cfg.message);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("message: ") + e.what());
  }
  cfg.epsilon = top.number("epsilon");
  require(cfg.epsilon > 0.0 && cfg.epsilon < 0.5, "epsilon must lie in (0, 0.5)");
  cfg.target_error = top.number("target_error");
  require(cfg.target_error > 0.0 && cfg.target_error < 1.0, "target_error must lie in (0, 1)");

  {
    ObjectReader ch(top.need("channel"), "channel");
    cfg.tau = ch.number("tau");
    cfg.noise_alice = ch.number("noise_alice");
    cfg.noise_bob = ch.number("noise_bob");
    ch.finish();
  }
  require(cfg.tau > 0.0 && cfg.tau <= 1.0, "channel.tau must lie in (0, 1]");
  require(cfg.noise_alice >= 0.0, "channel.noise_alice must be >= 0");
  require(cfg.noise_bob >= 0.0, "channel.noise_bob must be >= 0");
  cfg.rep_rate_hz = top.number("rep_rate_hz");
  require(cfg.rep_rate_hz > 0.0, "rep_rate_hz must be positive");

  cfg.seed = top.opt_count("seed");
  cfg.strict = top.opt_bool("strict").value_or(false);
  cfg.rescale = top.opt_number("rescale").value_or(1.0);
  require(cfg.rescale > 0.0 && cfg.rescale <= 1.0, "rescale must lie in (0, 1]");

  if (const json* g = top.find("mu_grid")) {
    ObjectReader grid(*g, "mu_grid");
    cfg.mu_grid.lo = grid.opt_number("lo").value_or(cfg.mu_grid.lo);
    cfg.mu_grid.hi = grid.opt_number("hi").value_or(cfg.mu_grid.hi);
    cfg.mu_grid.points = grid.opt_count("points").value_or(cfg.mu_grid.points);
    cfg.mu_grid.refine = grid.opt_bool("refine").value_or(cfg.mu_grid.refine);
    grid.finish();
  }
  require(cfg.mu_grid.lo > 0.0 && cfg.mu_grid.hi >= cfg.mu_grid.lo && cfg.mu_grid.points >= 1,
          "mu_grid needs 0 < lo <= hi and points >= 1");

  if (const json* s = top.find("simulate")) {
    ObjectReader sim(*s, "simulate");
    cfg.simulate.runs = sim.opt_count("runs").value_or(cfg.simulate.runs);
    sim.finish();
  }
  require(cfg.simulate.runs >= 1, "simulate.runs must be >= 1");

  if (const json* e = top.find("eavesdrop")) {
    ObjectReader eve(*e, "eavesdrop");
    auto& o = cfg.eavesdrop;
    o.trials = eve.opt_count("trials").value_or(o.trials);
    o.desk_signals = eve.opt_count("desk_signals");
    o.mu_scale = eve.opt_number("mu_scale").value_or(o.mu_scale);
    o.override_signals = eve.opt_count("override_signals");
    o.monitor_duration_s = eve.opt_number("monitor_duration_s").value_or(o.monitor_duration_s);
    o.monitor_interval_s = eve.opt_number("monitor_interval_s").value_or(o.monitor_interval_s);
    o.eve_noise = eve.opt_number("eve_noise");
    eve.finish();
  }
  const auto& o = cfg.eavesdrop;
  require(o.trials >= 100, "eavesdrop.trials must be >= 100 for a meaningful error estimate");
  require(!o.desk_signals || *o.desk_signals >= 1, "eavesdrop.desk_signals must be >= 1");
  require(o.mu_scale > 0.0, "eavesdrop.mu_scale must be positive");
  require(o.monitor_interval_s > 0.0, "eavesdrop.monitor_interval_s must be positive");
  require(o.monitor_duration_s >= 10.0 * o.monitor_interval_s,
          "eavesdrop.monitor_duration_s must cover at least 10 intervals");
  require(!o.eve_noise || *o.eve_noise >= 0.0, "eavesdrop.eve_noise must be >= 0");
  top.finish();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const RunConfig& cfg) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = cfg.name;
  doc["message"] = cfg.message;
  doc["epsilon"] = cfg.epsilon;
  doc["target_error"] = cfg.target_error;
  doc["channel"] = {{"tau", cfg.tau}, {"noise_alice", cfg.noise_alice}, {"noise_bob", cfg.noise_bob}};
  doc["rep_rate_hz"] = cfg.rep_rate_hz;
  doc["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  doc["strict"] = cfg.strict;
  doc["rescale"] = cfg.rescale;
  doc["mu_grid"] = {{"lo", cfg.mu_grid.lo},
                    {"hi", cfg.mu_grid.hi},
                    {"points", cfg.mu_grid.points},
                    {"refine", cfg.mu_grid.refine}};
  doc["simulate"] = {{"runs", cfg.simulate.runs}};
  const auto& o = cfg.eavesdrop;
  doc["eavesdrop"] = {{"trials", o.trials},
                      {"desk_signals", o.desk_signals ? json(*o.desk_signals) : json(nullptr)},
                      {"mu_scale", o.mu_scale},
                      {"override_signals", o.override_signals ? json(*o.override_signals) : json(nullptr)},
                      {"monitor_duration_s", o.monitor_duration_s},
                      {"monitor_interval_s", o.monitor_interval_s},
                      {"eve_noise", o.eve_noise ? json(*o.eve_noise) : json(nullptr)}};
  return doc;
}

PlanRequest make_request(const RunConfig& cfg) {
  PlanRequest req;
  req.b = Message(cfg.message).bit_count();
  req.epsilon = CovertnessBudget(cfg.epsilon);
  req.target_error = cfg.target_error;
  req.channel = ChannelModel(cfg.tau, ThermalMean(cfg.noise_alice), ThermalMean(cfg.noise_bob));
  req.rep_rate_hz = cfg.rep_rate_hz;
  req.mu_grid = cfg.mu_grid;
  return req;
}

json params_to_json(const ProtocolParams& p) {
  return json{{"b", p.b},
              {"d", p.d},
              {"k", p.k},
              {"q", p.q},
              {"n_pairs", p.n_pairs},
              {"bins_total", p.bins_total()},
              {"mu", p.mu},
              {"predicted_epsilon", p.predicted_epsilon},
              {"predicted_error", p.predicted_error},
              {"running_time_s", p.running_time_s},
              {"channel",
               {{"tau", p.channel.tau},
                {"noise_alice", p.channel.noise_alice.n_bar},
                {"noise_bob", p.channel.noise_bob.n_bar}}},
              {"rep_rate_hz", p.rep_rate_hz},
              {"p_correct", p.p_correct},
              {"p_wrong", p.p_wrong},
              {"bit_error", p.bit_error},
              {"divergence_nats", p.divergence}};
}

ProtocolParams params_from_json(const json& doc) {
  try {
    ProtocolParams p;
    p.b = doc.at("b").get<std::uint64_t>();
    p.d = doc.at("d").get<std::uint64_t>();
    p.k = doc.at("k").get<std::uint64_t>();
    p.q = doc.at("q").get<double>();
    p.n_pairs = doc.at("n_pairs").get<std::uint64_t>();
    p.mu = doc.at("mu").get<double>();
    p.predicted_epsilon = doc.at("predicted_epsilon").get<double>();
    p.predicted_error = doc.at("predicted_error").get<double>();
    p.running_time_s = doc.at("running_time_s").get<double>();
    const json& ch = doc.at("channel");
    p.channel = ChannelModel(ch.at("tau").get<double>(),
                             ThermalMean(ch.at("noise_alice").get<double>()),
                             ThermalMean(ch.at("noise_bob").get<double>()));
    p.rep_rate_hz = doc.at("rep_rate_hz").get<double>();
    p.p_correct = doc.at("p_correct").get<double>();
    p.p_wrong = doc.at("p_wrong").get<double>();
    p.bit_error = doc.at("bit_error").get<double>();
    p.divergence = doc.at("divergence_nats").get<double>();
    if (p.n_pairs < 1 || p.b < 1 || p.k < 1 || p.d > p.n_pairs) {
      throw ConfigError("plan parameters are inconsistent");
    }
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed plan parameters: ") + e.what());
  }
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_plan(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    fs::create_directories(out_dir);
    const PlanResult result = plan(make_request(cfg));
    const ProtocolParams& p = result.params;

    json doc = envelope(cfg, "plan");
    doc["params"] = params_to_json(p);
    json grid = json::array();
    for (const auto& ev : result.grid) {
      json row{{"mu", ev.mu}, {"feasible", ev.params.has_value()}};
      if (ev.params) {
        row["k"] = ev.params->k;
        row["n_pairs"] = ev.params->n_pairs;
      } else {
        row["reason"] = ev.reason;
      }
      grid.push_back(std::move(row));
    }
    doc["grid"] = std::move(grid);
    doc["refinement_evaluations"] = result.refinement.size();
    write_atomic(out_dir / "plan.json", doc.dump(2) + "\n");

    const std::string table = plan_table(cfg, p);
    write_atomic(out_dir / "plan.txt", table);
    log << table;
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir,
                 const std::optional<fs::path>& plan_file, std::ostream& log) {
  return guarded(log, [&] {
    const std::uint64_t seed = resolve_seed(cfg);
    fs::create_directories(out_dir);
    ProtocolParams p = obtain_params(cfg, plan_file, log);
    if (cfg.rescale < 1.0) p = rescale_plan(p, cfg.rescale);
    const Message message(cfg.message);
    const Bits bits = encode_message(message);

    json runs = json::array();
    std::uint64_t successes = 0, votes = 0, wrong = 0, pulses = 0, clicked = 0, wrong_bins = 0,
                  signal_bins = 0, bit_errors = 0;
    for (std::uint64_t r = 0; r < cfg.simulate.runs; ++r) {
      const std::uint64_t run_seed = derive_seed(seed, kStreamRun, r);
      PositionPlan plan;
      try {
        plan = choose_positions(SharedRandomness{derive_seed(run_seed, kStreamShared)}, p.n_pairs,
                                p.q, bits);
      } catch (const std::runtime_error& e) {
        throw InfeasibleError(e.what());
      }
      const Transcript t = simulate_transmission(p, plan, derive_seed(run_seed, kStreamChannel));
      const auto& s = t.stats;
      const std::string decoded = t.decoded.message().text();
      successes += s.bit_errors == 0;
      votes += s.votes;
      wrong += s.wrong_votes;
      pulses += s.d_prime;
      clicked += s.clicked_pulses;
      wrong_bins += s.wrong_bin_clicks;
      signal_bins += s.signal_bin_clicks;
      bit_errors += s.bit_errors;
      json row = stats_to_json(s);
      row["run"] = r;
      row["k_prime"] = plan.k_prime;
      row["decoded"] = decoded;
      runs.push_back(std::move(row));

      if (r == 0) {
        fs::path tmp = out_dir / "positions.cvpp.tmp";
        write_position_plan(plan, tmp);
        fs::rename(tmp, out_dir / "positions.cvpp");

        std::ostringstream csv;
        csv << "position,bit_index,value,outcome\n";
        for (std::size_t i = 0; i < plan.positions.size(); ++i) {
          csv << plan.positions[i] << ',';
          if (plan.bit_index[i] == kDummyBit) {
            csv << "dummy";
          } else {
            csv << plan.bit_index[i];
          }
          csv << ',' << static_cast<int>(plan.values[i]) << ',' << outcome_name(t.outcomes[i])
              << '\n';
        }
        write_atomic(out_dir / "transcript.csv", csv.str());

        std::ostringstream tallies;
        tallies << "bit,zero_count,one_count,decoded,correct\n";
        for (std::size_t b = 0; b < t.decoded.tallies.size(); ++b) {
          const BitTally& tally = t.decoded.tallies[b];
          const bool correct = !tally.ambiguous && tally.decoded == t.truth[b];
          tallies << b << ',' << tally.zeros << ',' << tally.ones << ','
                  << static_cast<int>(tally.decoded) << ',' << (correct ? 1 : 0) << '\n';
        }
        write_atomic(out_dir / "tallies.csv", tallies.str());
      }
    }

    json doc = envelope(cfg, "simulate");
    doc["seed"] = seed;
    doc["params"] = params_to_json(p);
    doc["runs"] = std::move(runs);
    const auto ratio = [](std::uint64_t a, std::uint64_t b) {
      return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
    };
    doc["summary"] = {
        {"runs", cfg.simulate.runs},
        {"successful_runs", successes},
        {"bit_errors", bit_errors},
        {"signal_probability", ratio(clicked, pulses)},
        {"signal_bin_probability", ratio(signal_bins, pulses)},
        {"noise_probability", ratio(wrong_bins, pulses)},
        {"error_rate", ratio(wrong, votes)},
        {"clicks_per_bit", ratio(votes, cfg.simulate.runs * p.b)},
        {"predicted_error_rate", p.p_wrong / (p.p_correct + p.p_wrong)},
        {"predicted_bit_error", p.bit_error},
    };
    write_atomic(out_dir / "summary.json", doc.dump(2) + "\n");

    log << "decoded " << successes << "/" << cfg.simulate.runs << " runs without bit errors; "
        << "error rate " << fmt("%.4f", ratio(wrong, votes)) << ", clicks/bit "
        << fmt("%.2f", ratio(votes, cfg.simulate.runs * p.b)) << '\n';
    return kExitOk;
  });
}

int cmd_eavesdrop(const RunConfig& cfg, const fs::path& out_dir,
                  const std::optional<fs::path>& plan_file, std::ostream& log) {
  return guarded(log, [&] {
    const std::uint64_t seed = resolve_seed(cfg);
    fs::create_directories(out_dir);
    const auto& opt = cfg.eavesdrop;
    const ProtocolParams full = obtain_params(cfg, plan_file, log);

    double factor = cfg.rescale;
    if (opt.desk_signals) {
      factor = std::min(factor, static_cast<double>(*opt.desk_signals) / static_cast<double>(full.d));
    }
    const ProtocolParams desk = rescale_plan(full, factor);
    ProtocolParams tested = desk;
    if (opt.override_signals) {
      tested.d = *opt.override_signals;
      tested.k = std::max<std::uint64_t>(1, tested.d / tested.b);
      if (tested.d > tested.n_pairs) throw ConfigError("override_signals exceeds the mode count");
      tested = with_intensity(tested, tested.mu);
    }
    if (opt.mu_scale != 1.0) tested = with_intensity(tested, tested.mu * opt.mu_scale);

    DistinguisherOptions dopts;
    dopts.eve_noise = opt.eve_noise;
    dopts.reference_epsilon = desk.predicted_epsilon;
    const DistinguisherResult r =
        run_distinguisher(tested, opt.trials, derive_seed(seed, kStreamEve), dopts);

    const MonitorTrace on = simulate_monitoring(tested, true, opt.monitor_duration_s,
                                                opt.monitor_interval_s,
                                                derive_seed(seed, kStreamMonitor, 1), opt.eve_noise);
    const MonitorTrace off = simulate_monitoring(tested, false, opt.monitor_duration_s,
                                                 opt.monitor_interval_s,
                                                 derive_seed(seed, kStreamMonitor, 0), opt.eve_noise);
    std::ostringstream csv;
    csv << "interval,time_s,count_communicating,count_silent\n";
    for (std::size_t i = 0; i < on.counts.size(); ++i) {
      csv << i << ',' << static_cast<double>(i) * on.interval_s << ',' << on.counts[i] << ','
          << off.counts[i] << '\n';
    }
    write_atomic(out_dir / "monitor.csv", csv.str());

    json doc = envelope(cfg, "eavesdrop");
    doc["seed"] = seed;
    doc["rescale_factor"] = factor;
    doc["params_full"] = params_to_json(full);
    doc["params_desk"] = params_to_json(desk);
    doc["params_tested"] = params_to_json(tested);
    doc["monitor_bins_per_interval"] = on.bins_per_interval;
    doc["result"] = {{"trials", r.trials},
                     {"threshold_test", detector_to_json(r.threshold_test)},
                     {"llr_test", detector_to_json(r.llr_test)},
                     {"empirical_pe", r.empirical_pe},
                     {"std_error", r.std_error},
                     {"ci95", {r.ci_low, r.ci_high}},
                     {"empirical_bias", r.empirical_bias},
                     {"bound_epsilon", r.bound_epsilon},
                     {"budget_epsilon", r.budget_epsilon}};
    doc["verdict"] = r.passed ? "PASS" : "FAIL";
    write_atomic(out_dir / "distinguisher.json", doc.dump(2) + "\n");

    log << "empirical P_e " << fmt("%.4f", r.empirical_pe) << " [" << fmt("%.4f", r.ci_low)
        << ", " << fmt("%.4f", r.ci_high) << "], bias " << fmt("%.4g", r.empirical_bias)
        << " vs budget " << fmt("%.4g", r.budget_epsilon) << ": " << (r.passed ? "PASS" : "FAIL")
        << '\n';
    return r.passed ? kExitOk : kExitSecurityFail;
  });
}

int cmd_validate(const RunConfig& cfg, const fs::path& out_dir, const fs::path& plan_file,
                 std::ostream& log) {
  return guarded(log, [&] {
    fs::create_directories(out_dir);
    const ProtocolParams p = obtain_params(cfg, plan_file, log);
    const ValidationReport report = validate_plan(p, make_request(cfg));
    json doc = envelope(cfg, "validate");
    doc["params"] = params_to_json(p);
    json checks = json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"value", c.value},
                        {"limit", c.limit},
                        {"margin", c.margin},
                        {"passed", c.passed}});
      log << (c.passed ? "PASS " : "FAIL ") << c.name << " value " << fmt("%.6g", c.value)
          << " limit " << fmt("%.6g", c.limit) << '\n';
    }
    doc["checks"] = std::move(checks);
    doc["passed"] = report.passed();
    write_atomic(out_dir / "validation.json", doc.dump(2) + "\n");
    return report.passed() ? kExitOk : kExitSecurityFail;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plan, simulate and audit covert transmissions over a noisy optical channel"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> rescale;
  std::optional<std::uint64_t> trials;
  std::string plan_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
  };
  auto* plan_cmd = app.add_subcommand("plan", "Optimize protocol parameters");
  add_common(plan_cmd);
  auto* sim_cmd = app.add_subcommand("simulate", "Encode, transmit and decode the message");
  add_common(sim_cmd);
  sim_cmd->add_option("--plan", plan_path, "Existing plan.json (planned inline otherwise)");
  sim_cmd->add_option("--rescale", rescale, "Shrink N and d by this factor");
  auto* eve_cmd = app.add_subcommand("eavesdrop", "Run the eavesdropper's detection attempt");
  add_common(eve_cmd);
  eve_cmd->add_option("--plan", plan_path, "Existing plan.json (planned inline otherwise)");
  eve_cmd->add_option("--rescale", rescale, "Shrink N and d by this factor");
  eve_cmd->add_option("--trials", trials, "Monte-Carlo trials for the distinguisher");
  auto* val_cmd = app.add_subcommand("validate", "Recheck a plan against its targets");
  add_common(val_cmd);
  val_cmd->add_option("--plan", plan_path, "plan.json to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.seed = seed;
    if (rescale) {
      require(*rescale > 0.0 && *rescale <= 1.0, "--rescale must lie in (0, 1]");
      cfg.rescale = *rescale;
    }
    if (trials) {
      require(*trials >= 100, "--trials must be >= 100 for a meaningful error estimate");
      cfg.eavesdrop.trials = *trials;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const std::optional<fs::path> plan_file =
      plan_path.empty() ? std::nullopt : std::optional<fs::path>(plan_path);
  if (*plan_cmd) return cmd_plan(cfg, out_dir, out);
  if (*sim_cmd) return cmd_simulate(cfg, out_dir, plan_file, out);
  if (*eve_cmd) return cmd_eavesdrop(cfg, out_dir, plan_file, out);
  return cmd_validate(cfg, out_dir, *plan_file, out);
}

}  // namespace covert::cli
