// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
//
// Usage: acceptance [--expect-fail 2,3,7] [--only 1,4]
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "covert/cli.hpp"
#include "covert/planner.hpp"
#include "covert/simulator.hpp"
#include "oracles.hpp"

using namespace covert;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240917;

struct Column {
  std::string message;
  double epsilon;
  double rep_rate_hz;
  double noise_alice;
  double noise_bob;
  // Published values.
  double mu;
  double d;
  double bins;
  // Measured click statistics and the mean number of clicks per bit.
  double signal_prob;
  double noise_prob;
  double error_rate;
  double clicks_per_bit;
};

const std::vector<Column> kColumns = {
    {"CQTUSTC", 0.014, 500e6, 2.30e-3, 3.18e-3, 3.52e-2, 68651, 1.56e12, 8.42e-3, 1.04e-3,
     0.1367, 16.5},
    {"PRTYSAT@NINE", 0.055, 500e6, 2.50e-3, 2.74e-3, 3.79e-2, 96919, 2.17e11, 8.62e-3, 9.01e-4,
     0.1485, 14.0},
    {"QPQI", 0.067, 500e3, 0.60, 0.68, 0.266, 8416, 3.71e9, 9.26e-2, 2.23e-2, 0.2362, 39.0},
};

constexpr double kTau = 0.18;
constexpr double kTargetError = 0.01;

PlanRequest request_for(const Column& c) {
  PlanRequest req;
  req.b = Message(c.message).bit_count();
  req.epsilon = CovertnessBudget(c.epsilon);
  req.target_error = kTargetError;
  req.channel = ChannelModel(kTau, ThermalMean(c.noise_alice), ThermalMean(c.noise_bob));
  req.rep_rate_hz = c.rep_rate_hz;
  return req;
}

std::map<std::string, std::pair<ProtocolParams, double>> g_plans;

// Plans a column once; returns the parameters and the planning time.
const std::pair<ProtocolParams, double>& planned(const Column& c) {
  auto it = g_plans.find(c.message);
  if (it == g_plans.end()) {
    const auto t0 = std::chrono::steady_clock::now();
    ProtocolParams p = plan(request_for(c)).params;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    it = g_plans.emplace(c.message, std::pair{p, s}).first;
  }
  return it->second;
}

std::string fmt(const char* pattern, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool passed = true;
  std::vector<std::string> details;

  void check(bool ok, std::string line) {
    passed = passed && ok;
    details.push_back((ok ? "ok    " : "FAIL  ") + std::move(line));
  }
  void note(std::string line) { details.push_back("info  " + std::move(line)); }
};

double rel_dev(double got, double want) { return got / want - 1.0; }

// 1. Relative entropy against a 50-digit brute-force sum.
Outcome relative_entropy_oracle() {
  Outcome o;
  const double q = 68651.0 / (1.56e12 / static_cast<double>(kBinsPerMode));
  const auto t0 = std::chrono::steady_clock::now();
  const ModeStates states(CoherentMean(3.52e-2), ThermalMean(2.30e-3));
  const double got = states.divergence(q).nats;
  const double lib_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double want = static_cast<double>(oracle::relative_entropy(3.52e-2, 2.30e-3, q));
  const double err = std::fabs(got / want - 1.0);
  o.check(err < 5e-7, fmt("D = %.12e nats, oracle %.12e, relative error %.2e (limit 5e-7)", got,
                          want, err));
  o.check(lib_s < 1.0, fmt("library time %.4f s (limit 1 s)", lib_s));
  return o;
}

// 2. Parameter table reproduction.
Outcome table_reproduction() {
  Outcome o;
  for (const auto& c : kColumns) {
    const auto& [p, secs] = planned(c);
    const double bins = static_cast<double>(p.bins_total());
    const double mu_dev = rel_dev(p.mu, c.mu);
    const double d_dev = rel_dev(static_cast<double>(p.d), c.d);
    const double bin_ratio = bins / c.bins;
    o.check(std::fabs(mu_dev) <= 0.30,
            fmt("%-12s mu %.4e vs %.4e (%+.1f%%, limit 30%%)", c.message.c_str(), p.mu, c.mu,
                100 * mu_dev));
    o.check(std::fabs(d_dev) <= 0.30,
            fmt("%-12s d %llu vs %.0f (%+.1f%%, limit 30%%)", c.message.c_str(),
                static_cast<unsigned long long>(p.d), c.d, 100 * d_dev));
    o.check(bin_ratio >= 0.5 && bin_ratio <= 2.0,
            fmt("%-12s bins %.3e vs %.3e (ratio %.3f, limit [0.5, 2])", c.message.c_str(), bins,
                c.bins, bin_ratio));
    o.check(p.running_time_s == bins / c.rep_rate_hz,
            fmt("%-12s running time %.6g s = bins / rate", c.message.c_str(), p.running_time_s));
    o.check(secs < 60.0, fmt("%-12s planning time %.2f s (limit 60 s)", c.message.c_str(), secs));
  }
  return o;
}

// 3. Repetition count for the first message.
Outcome repetition_count() {
  Outcome o;
  const auto& [p, secs] = planned(kColumns[0]);
  const double dev = rel_dev(static_cast<double>(p.k), 1961.0);
  o.check(std::fabs(dev) <= 0.30, fmt("k = %llu vs 1961 (%+.1f%%, limit 30%%)",
                                      static_cast<unsigned long long>(p.k), 100 * dev));
  o.check(secs < 60.0, fmt("planning time %.2f s (limit 60 s)", secs));
  // The objective is flat near its minimum: pinning the published mu moves k
  // and the bin count.
  const auto at_published_mu = plan_for_mu(request_for(kColumns[0]), kColumns[0].mu);
  o.note(fmt("at the published mu %.3g: k = %llu, d = %llu, bins %.3e", kColumns[0].mu,
             static_cast<unsigned long long>(at_published_mu.k),
             static_cast<unsigned long long>(at_published_mu.d),
             static_cast<double>(at_published_mu.bins_total())));
  return o;
}

// 4. Closed form against exhaustive enumeration.
Outcome enumeration_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 eng(kSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double pc = u(eng);
    const double pw = u(eng) * (1.0 - pc);
    for (unsigned k = 1; k <= 12; ++k) {
      const double diff =
          std::fabs(bit_error_prob(k, {pc, pw}) - oracle::bit_error_brute(k, pc, pw));
      worst = std::max(worst, diff);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(worst <= 1e-12, fmt("max |closed form - enumeration| = %.2e over 100 pairs, k <= 12 "
                              "(limit 1e-12)", worst));
  o.check(secs < 10.0, fmt("time %.2f s (limit 10 s)", secs));
  return o;
}

// Position plan with `bits` message bits, k positions each, no dummies.
PositionPlan block_plan(std::uint64_t bits, std::uint64_t k, std::mt19937_64& eng) {
  PositionPlan plan;
  plan.b = bits;
  plan.k_prime = k;
  plan.n_pairs = bits * k;
  plan.positions.resize(bits * k);
  plan.bit_index.resize(bits * k);
  plan.values.resize(bits * k);
  for (std::uint64_t i = 0; i < bits; ++i) {
    const auto v = static_cast<std::uint8_t>(eng() & 1);
    for (std::uint64_t j = 0; j < k; ++j) {
      const std::uint64_t at = i * k + j;
      plan.positions[at] = at;
      plan.bit_index[at] = static_cast<std::uint32_t>(i);
      plan.values[at] = v;
    }
  }
  return plan;
}

// Click probabilities that reproduce a measured per-pulse click rate in
// either bin (signal_prob) and per-bin noise rate (noise_prob) when the two
// bins click independently.
ClickProbabilities matched_probs(const Column& c) {
  return {(c.signal_prob - c.noise_prob) / (1.0 - c.noise_prob), c.noise_prob};
}

// 5. Closed form against the transmission simulator.
Outcome monte_carlo_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ClickProbabilities cp = matched_probs(kColumns[0]);
  std::mt19937_64 eng(kSeed);
  const std::uint64_t blocks = 100'000;
  const std::uint64_t batch = 1000;
  for (std::uint64_t k : {17ULL, 101ULL, 1961ULL}) {
    ProtocolParams p;
    p.b = batch;
    p.p_correct = cp.p_correct;
    p.p_wrong = cp.p_wrong;
    std::uint64_t errors = 0;
    for (std::uint64_t r = 0; r < blocks / batch; ++r) {
      const PositionPlan plan = block_plan(batch, k, eng);
      p.n_pairs = plan.n_pairs;
      errors += simulate_transmission(p, plan, derive_seed(kSeed, k, r)).stats.bit_errors;
    }
    const double delta = bit_error_prob(k, cp);
    const double emp = static_cast<double>(errors) / static_cast<double>(blocks);
    const double sigma = std::sqrt(delta * (1.0 - delta) / static_cast<double>(blocks));
    const double z = (emp - delta) / sigma;
    o.check(std::fabs(z) <= 3.0, fmt("k = %4llu: simulated %.5f vs closed form %.5f (z = %+.2f)",
                                     static_cast<unsigned long long>(k), emp, delta, z));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < 60.0, fmt("time %.2f s (limit 60 s)", secs));
  return o;
}

// 6. Click probabilities against photon-level thinning.
Outcome thinning_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Column* c : {&kColumns[0], &kColumns[2]}) {
    const auto cp = click_probs(CoherentMean(c->mu),
                                ChannelModel(kTau, ThermalMean(c->noise_alice), ThermalMean(c->noise_bob)));
    const auto mc = oracle::click_probs_thinning(c->mu, kTau, c->noise_bob, 10'000'000, kSeed);
    const double zc = (mc.p_correct - cp.p_correct) / mc.se_correct;
    const double zw = (mc.p_wrong - cp.p_wrong) / mc.se_wrong;
    o.check(std::fabs(zc) <= 3.0, fmt("%-8s p_C %.6e vs MC %.6e (z = %+.2f)", c->message.c_str(),
                                      cp.p_correct, mc.p_correct, zc));
    o.check(std::fabs(zw) <= 3.0, fmt("%-8s p_W %.6e vs MC %.6e (z = %+.2f)", c->message.c_str(),
                                      cp.p_wrong, mc.p_wrong, zw));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < 60.0, fmt("time %.2f s (limit 60 s)", secs));
  return o;
}

struct RoundTrip {
  std::uint64_t runs = 0;
  std::uint64_t perfect = 0;
  std::uint64_t votes = 0;
  std::uint64_t wrong_votes = 0;
  std::uint64_t mean_k_prime = 0;
};

RoundTrip round_trips(const ProtocolParams& p, const std::string& text, std::uint64_t runs,
                      std::uint64_t stream) {
  const Bits bits = encode_message(Message(text));
  RoundTrip rt;
  rt.runs = runs;
  std::uint64_t k_sum = 0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    const auto plan = choose_positions(SharedRandomness{derive_seed(kSeed, stream, 2 * r)},
                                       p.n_pairs, p.q, bits);
    const auto t = simulate_transmission(p, plan, derive_seed(kSeed, stream, 2 * r + 1));
    rt.perfect += t.stats.bit_errors == 0 && t.decoded.message().text() == text;
    rt.votes += t.stats.votes;
    rt.wrong_votes += t.stats.wrong_votes;
    k_sum += plan.k_prime;
  }
  rt.mean_k_prime = k_sum / runs;
  return rt;
}

// 7. End-to-end round trip.
Outcome round_trip() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t stream = 700;
  for (const auto& c : kColumns) {
    const ProtocolParams& full = planned(c).first;
    const double factor = std::min(1.0, 5000.0 / static_cast<double>(full.d));
    const ProtocolParams desk = rescale_plan(full, factor);

    const RoundTrip rt = round_trips(desk, c.message, 100, stream++);
    o.check(rt.perfect >= 99,
            fmt("%-12s desk scale (d = %llu, k' ~ %llu): %llu/100 runs decoded (need 99)",
                c.message.c_str(), static_cast<unsigned long long>(desk.d),
                static_cast<unsigned long long>(rt.mean_k_prime),
                static_cast<unsigned long long>(rt.perfect)));

    const double predicted = desk.p_wrong / (desk.p_correct + desk.p_wrong);
    const double rate = static_cast<double>(rt.wrong_votes) / static_cast<double>(rt.votes);
    const double sigma = std::sqrt(predicted * (1.0 - predicted) / static_cast<double>(rt.votes));
    o.check(std::fabs(rate - predicted) <= 3.0 * sigma,
            fmt("%-12s error rate %.4f vs predicted 1 - p_g = %.4f (z = %+.2f)", c.message.c_str(),
                rate, predicted, (rate - predicted) / sigma));
    const double pc = desk.p_correct, pw = desk.p_wrong;
    const double single = pw * (1.0 - pc) / (pc * (1.0 - pw) + pw * (1.0 - pc));
    o.note(fmt("%-12s with double clicks discarded the vote error is %.4f (z = %+.2f)",
               c.message.c_str(), single, (rate - single) / sigma));

    const RoundTrip at_full = round_trips(full, c.message, 100, stream++);
    o.note(fmt("%-12s at the planned d = %llu (k = %llu): %llu/100 runs decoded",
               c.message.c_str(), static_cast<unsigned long long>(full.d),
               static_cast<unsigned long long>(full.k),
               static_cast<unsigned long long>(at_full.perfect)));

    // Published error rates at the published click statistics.
    ProtocolParams matched = full;
    const ClickProbabilities cp = matched_probs(c);
    matched.p_correct = cp.p_correct;
    matched.p_wrong = cp.p_wrong;
    const RoundTrip mt = round_trips(matched, c.message, 100, stream++);
    const double m_rate = static_cast<double>(mt.wrong_votes) / static_cast<double>(mt.votes);
    const double se_sim = std::sqrt(m_rate * (1.0 - m_rate) / static_cast<double>(mt.votes));
    const double published_votes = c.clicks_per_bit * static_cast<double>(full.b);
    const double se_published = std::sqrt(c.error_rate * (1.0 - c.error_rate) / published_votes);
    const double tol = 3.0 * std::hypot(se_sim, se_published);
    o.check(std::fabs(m_rate - c.error_rate) <= tol,
            fmt("%-12s matched clicks: error rate %.4f vs published %.4f (|diff| %.4f, "
                "limit %.4f)", c.message.c_str(), m_rate, c.error_rate,
                std::fabs(m_rate - c.error_rate), tol));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < 300.0, fmt("time %.2f s (limit 300 s)", secs));
  return o;
}

// 8. Security soundness at desk scale, with an inflated-mu negative control.
Outcome security_soundness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t stream = 800;
  for (const auto& c : kColumns) {
    const ProtocolParams& full = planned(c).first;
    const ProtocolParams desk =
        rescale_plan(full, std::min(1.0, 5000.0 / static_cast<double>(full.d)));
    const auto r = run_distinguisher(desk, 10'000, derive_seed(kSeed, stream++));
    o.check(r.passed, fmt("%-12s P_e %.4f +- %.4f, bias %+.4f <= bound %.4f + 3 SE",
                          c.message.c_str(), r.empirical_pe, r.std_error, r.empirical_bias,
                          r.bound_epsilon));
  }
  const ProtocolParams& full = planned(kColumns[0]).first;
  const ProtocolParams desk = rescale_plan(full, 5000.0 / static_cast<double>(full.d));
  DistinguisherOptions opts;
  opts.reference_epsilon = desk.predicted_epsilon;
  const auto loud = run_distinguisher(with_intensity(desk, desk.mu * 1000.0), 10'000,
                                      derive_seed(kSeed, stream), opts);
  o.check(!loud.passed, fmt("mu x 1000 control: bias %+.4f exceeds %.4f + 3 SE = %.4f",
                            loud.empirical_bias, loud.budget_epsilon,
                            loud.budget_epsilon + 3.0 * loud.std_error));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < 600.0, fmt("time %.2f s (limit 600 s)", secs));
  return o;
}

// 9. Quadratic growth of the required mode count.
Outcome square_root_law() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Column& c = kColumns[0];
  const std::vector<double> ds = {1000, 2000, 4000, 8000, 16000};
  std::vector<double> ns;
  for (double d : ds) {
    ns.push_back(static_cast<double>(
        min_pairs_for_budget(CovertnessBudget(c.epsilon), static_cast<std::uint64_t>(d),
                             CoherentMean(c.mu), ThermalMean(c.noise_alice))
            .n_pairs));
  }
  // N = a d^2 fitted in log space, and the free log-log slope.
  double log_a = 0.0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = std::log(ds[i]), y = std::log(ns[i]);
    log_a += y - 2.0 * x;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(ds.size());
  const double a = std::exp(log_a / n);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double dev = ns[i] / (a * ds[i] * ds[i]) - 1.0;
    o.check(std::fabs(dev) <= 0.10,
            fmt("d = %6.0f: N = %.4e, quadratic fit %.4e (%+.2f%%)", ds[i], ns[i],
                a * ds[i] * ds[i], 100 * dev));
  }
  o.note(fmt("log-log slope %.4f", slope));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < 60.0, fmt("time %.2f s (limit 60 s)", secs));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "covertctl");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// 10. Byte-identical outputs for repeated seeded commands.
Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "covert_acceptance_determinism";
  fs::remove_all(root);
  const std::string cfg = std::string(COVERT_CONFIG_DIR) + "/qpqi.json";
  std::vector<std::string> dirs = {(root / "a").string(), (root / "b").string()};
  for (const auto& out : dirs) {
    const std::string plan = out + "/plan.json";
    const std::string seed = std::to_string(kSeed);
    int rc = run_cli({"plan", "--config", cfg, "--out", out});
    rc |= run_cli({"simulate", "--config", cfg, "--out", out, "--plan", plan, "--seed", seed});
    rc |= run_cli({"eavesdrop", "--config", cfg, "--out", out, "--plan", plan, "--seed", seed,
                   "--trials", "2000"});
    rc |= run_cli({"validate", "--config", cfg, "--out", out, "--plan", plan});
    o.check(rc == 0, "all commands exited with status 0 in " + out);
  }
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const fs::path other = fs::path(dirs[1]) / entry.path().filename();
    const bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
    o.check(same, entry.path().filename().string() + " identical across runs");
  }
  fs::remove_all(root);
  return o;
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_failures = parse_list(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--expect-fail LIST] [--only LIST]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"relative entropy vs 50-digit oracle", relative_entropy_oracle},
      {"parameter table reproduction", table_reproduction},
      {"repetition count", repetition_count},
      {"bit error closed form vs enumeration", enumeration_oracle},
      {"bit error closed form vs Monte Carlo", monte_carlo_oracle},
      {"click probabilities vs photon thinning", thinning_oracle},
      {"end-to-end round trip", round_trip},
      {"security soundness", security_soundness},
      {"square-root law", square_root_law},
      {"determinism", determinism},
  };

  std::set<int> failures;
  std::size_t ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.passed) failures.insert(id);
    std::cout << (o.passed ? "[PASS] " : "[FAIL] ") << fmt("%2d  %-42s %7.2f s", id,
                                                           criteria[i].first.c_str(), secs)
              << '\n';
    for (const auto& line : o.details) std::cout << "         " << line << '\n';
    std::cout.flush();
  }

  std::cout << "\n" << ran - failures.size() << " passed, " << failures.size()
            << " failed";
  if (!expected_failures.empty()) {
    std::cout << " (expected failures:";
    for (int id : expected_failures) std::cout << ' ' << id;
    std::cout << ")";
  }
  std::cout << '\n';
  if (!only.empty()) {
    std::set<int> filtered;
    for (int id : expected_failures) {
      if (only.count(id)) filtered.insert(id);
    }
    expected_failures = filtered;
  }
  return failures == expected_failures ? 0 : 1;
}
