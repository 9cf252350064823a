#include "carca/evaluation/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "carca/data/sampling.hpp"
#include "carca/error.hpp"
#include "carca/evaluation/metrics.hpp"
#include "carca/numerics/random.hpp"
#include "json.hpp"

namespace carca::evaluation {
namespace {

using nlohmann::json;

struct UserMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  double auc = 0.0;
};

UserMetrics score_user(const Scorer& scorer, const data::EvalCase& c, std::size_t item_count,
                       const Protocol& protocol, std::uint64_t seed) {
  numerics::Rng rng(numerics::derive_seed({seed, static_cast<std::uint64_t>(c.user)}));
  const auto candidates = data::sample_eval_candidates(c, item_count, protocol.negatives, rng);
  const auto scores = scorer.score(c, candidates);
  if (scores.size() != candidates.size()) {
    throw ContractError("scorer '" + scorer.name() + "' returned " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(candidates.size()) + " candidates");
  }
  const double pos = scores.front();
  const std::span<const double> neg(scores.data() + 1, scores.size() - 1);
  UserMetrics m;
  const std::size_t rank = rank_position(pos, neg);
  m.hr = hr_at_k(rank, protocol.k);
  m.ndcg = ndcg_at_k(rank, protocol.k);
  if (protocol.kind == ProtocolKind::auc) m.auc = auc(pos, neg);
  return m;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

std::string_view to_string(ProtocolKind kind) {
  return kind == ProtocolKind::ranking ? "ranking" : "auc";
}

ProtocolKind parse_protocol_kind(std::string_view s) {
  if (s == "ranking") return ProtocolKind::ranking;
  if (s == "auc") return ProtocolKind::auc;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected ranking or auc)");
}

Protocol Protocol::ranking() { return Protocol{}; }

Protocol Protocol::auc_protocol() {
  Protocol p;
  p.kind = ProtocolKind::auc;
  p.negatives = 500;
  return p;
}

bool RankingReport::operator==(const RankingReport& o) const {
  auto same_run = [](const RunMetrics& a, const RunMetrics& b) {
    return a.seed == b.seed && a.hr == b.hr && a.ndcg == b.ndcg && a.auc == b.auc;
  };
  auto same_summary = [](const std::optional<MetricSummary>& a, const std::optional<MetricSummary>& b) {
    return a.has_value() == b.has_value() && (!a || (a->mean == b->mean && a->std == b->std));
  };
  return scorer == o.scorer && kind == o.kind && k == o.k && negatives == o.negatives &&
         users == o.users && seeds == o.seeds &&
         std::equal(runs.begin(), runs.end(), o.runs.begin(), o.runs.end(), same_run) &&
         same_summary(hr, o.hr) && same_summary(ndcg, o.ndcg) && same_summary(auc, o.auc);
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("CARCA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v >= 1) n = std::min(n, static_cast<std::size_t>(v));
  }
  return n;
}

RankingReport evaluate(const Scorer& scorer, std::span<const data::EvalCase> cases,
                       std::size_t item_count, const Protocol& protocol) {
  if (protocol.k == 0) throw ConfigError("cutoff K must be positive");
  if (protocol.negatives == 0) throw ConfigError("need at least one negative per user");
  if (protocol.seeds.empty()) throw ConfigError("need at least one evaluation seed");
  if (cases.empty()) throw DataError("no evaluation cases");

  RankingReport report;
  report.scorer = scorer.name();
  report.kind = protocol.kind;
  report.k = protocol.k;
  report.negatives = protocol.negatives;
  report.users = cases.size();
  report.seeds = protocol.seeds;

  const std::size_t workers = std::min(worker_count(), cases.size());
  std::vector<UserMetrics> per_user(cases.size());
  std::vector<double> hr_runs, ndcg_runs, auc_runs;

  for (std::uint64_t seed : protocol.seeds) {
    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](std::size_t w) {
      try {
        for (std::size_t u = w; u < cases.size(); u += workers) {
          per_user[u] = score_user(scorer, cases[u], item_count, protocol, seed);
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    };
    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    double hr = 0.0, ndcg = 0.0, auc_sum = 0.0;
    for (const auto& m : per_user) {
      hr += m.hr;
      ndcg += m.ndcg;
      auc_sum += m.auc;
    }
    const double n = static_cast<double>(cases.size());
    RunMetrics run;
    run.seed = seed;
    run.ndcg = ndcg / n;
    ndcg_runs.push_back(*run.ndcg);
    if (protocol.kind == ProtocolKind::ranking) {
      run.hr = hr / n;
      hr_runs.push_back(*run.hr);
    } else {
      run.auc = auc_sum / n;
      auc_runs.push_back(*run.auc);
    }
    report.runs.push_back(run);
  }

  report.ndcg = summarize(ndcg_runs);
  if (protocol.kind == ProtocolKind::ranking) {
    report.hr = summarize(hr_runs);
  } else {
    report.auc = summarize(auc_runs);
  }
  return report;
}

std::string report_to_json(const RankingReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    json entry{{"seed", r.seed}};
    if (r.hr) entry["hr"] = *r.hr;
    if (r.ndcg) entry["ndcg"] = *r.ndcg;
    if (r.auc) entry["auc"] = *r.auc;
    runs.push_back(std::move(entry));
  }
  json mean = json::object();
  json stdev = json::object();
  auto put = [&](const char* key, const std::optional<MetricSummary>& s) {
    if (!s) return;
    mean[key] = s->mean;
    stdev[key] = s->std;
  };
  put("hr", report.hr);
  put("ndcg", report.ndcg);
  put("auc", report.auc);

  json doc{{"scorer", report.scorer},
           {"protocol", std::string(to_string(report.kind))},
           {"k", report.k},
           {"negatives", report.negatives},
           {"users", report.users},
           {"seeds", report.seeds},
           {"runs", std::move(runs)},
           {"mean", std::move(mean)},
           {"std", std::move(stdev)}};
  return doc.dump(2) + "\n";
}

RankingReport report_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    RankingReport report;
    report.scorer = doc.at("scorer").get<std::string>();
    report.kind = parse_protocol_kind(doc.at("protocol").get<std::string>());
    report.k = doc.at("k").get<std::size_t>();
    report.negatives = doc.at("negatives").get<std::size_t>();
    report.users = doc.at("users").get<std::size_t>();
    report.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& entry : doc.at("runs")) {
      RunMetrics r;
      r.seed = entry.at("seed").get<std::uint64_t>();
      if (entry.contains("hr")) r.hr = entry["hr"].get<double>();
      if (entry.contains("ndcg")) r.ndcg = entry["ndcg"].get<double>();
      if (entry.contains("auc")) r.auc = entry["auc"].get<double>();
      report.runs.push_back(r);
    }
    const json& mean = doc.at("mean");
    const json& stdev = doc.at("std");
    auto get = [&](const char* key) -> std::optional<MetricSummary> {
      if (!mean.contains(key)) return std::nullopt;
      return MetricSummary{mean[key].get<double>(), stdev.at(key).get<double>()};
    };
    report.hr = get("hr");
    report.ndcg = get("ndcg");
    report.auc = get("auc");
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ranking report: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const RankingReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  out << report_to_json(report);
}

}  // namespace carca::evaluation
