// Closed-loop throughput measurement (si-QPS: sustained queries per second
// for one shared model instance) and the vocabulary-size / decode-latency
// sweep. The harness is the one intentionally concurrent component: N
// workers share an immutable engine; each owns its RNG and result slot.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dverg/checkpoint.hpp"
#include "dverg/generate.hpp"

namespace dverg {

struct BenchReport {
    double si_qps = 0;
    double latency_mean_ms = 0;
    double latency_p50_ms = 0;
    double latency_p95_ms = 0;
    double latency_p99_ms = 0;
    int concurrency = 1;
    double encode_ms = 0;  // mean per query, as reported by the engine
    double vocab_ms = 0;
    double decode_ms = 0;
    long total_queries = 0;
};

inline void to_json(nlohmann::json& j, const BenchReport& r) {
    j = nlohmann::json{{"si_qps", r.si_qps},
                       {"latency_mean_ms", r.latency_mean_ms},
                       {"latency_p50_ms", r.latency_p50_ms},
                       {"latency_p95_ms", r.latency_p95_ms},
                       {"latency_p99_ms", r.latency_p99_ms},
                       {"concurrency", r.concurrency},
                       {"encode_ms", r.encode_ms},
                       {"vocab_ms", r.vocab_ms},
                       {"decode_ms", r.decode_ms},
                       {"total_queries", r.total_queries}};
}

// One query against the shared model; the RNG belongs to the calling worker.
using BenchEngine = std::function<StageTimings(const std::vector<int>& question, std::mt19937&)>;

namespace detail {

inline double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0;
    size_t rank = static_cast<size_t>(std::ceil(q * double(sorted.size())));
    rank = std::min(std::max<size_t>(rank, 1), sorted.size());
    return sorted[rank - 1];
}

}  // namespace detail

// Drives `concurrency` closed-loop workers (each issues the next query as
// soon as the previous completes) for 10% warmup plus a measured window;
// si_qps = queries completed in the window / window wall time.
inline BenchReport run_qps(const BenchEngine& engine,
                           const std::vector<std::vector<int>>& questions, int concurrency,
                           double duration_s, uint64_t seed) {
    if (concurrency < 1) throw std::invalid_argument("run_qps: concurrency must be >= 1");
    if (!(duration_s > 0)) throw std::invalid_argument("run_qps: duration must be positive");
    if (questions.empty()) throw std::invalid_argument("run_qps: no questions");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto t_measure = t0 + std::chrono::duration_cast<clock::duration>(
                                    std::chrono::duration<double>(0.1 * duration_s));
    const auto t_end = t0 + std::chrono::duration_cast<clock::duration>(
                                std::chrono::duration<double>(duration_s));

    struct WorkerResult {
        std::vector<double> latencies_ms;
        StageTimings sums;
        std::string error;
    };
    std::vector<WorkerResult> results(concurrency);
    std::atomic<bool> abort{false};

    auto worker = [&](int widx) {
        WorkerResult& res = results[widx];
        std::mt19937 rng(static_cast<uint32_t>(seed + uint64_t(widx)));
        size_t cursor = static_cast<size_t>(widx) % questions.size();
        while (!abort.load(std::memory_order_relaxed) && clock::now() < t_end) {
            const auto& q = questions[cursor];
            cursor = (cursor + 1) % questions.size();
            auto start = clock::now();
            StageTimings t;
            try {
                t = engine(q, rng);
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "run_qps: query failed on question [";
                for (size_t i = 0; i < q.size(); ++i) msg << (i ? " " : "") << q[i];
                msg << "]: " << e.what();
                res.error = msg.str();
                abort.store(true, std::memory_order_relaxed);
                return;
            }
            auto done = clock::now();
            if (done < t_measure) continue;  // warmup queries are discarded
            res.latencies_ms.push_back(
                std::chrono::duration<double, std::milli>(done - start).count());
            res.sums.encode_ms += t.encode_ms;
            res.sums.vocab_ms += t.vocab_ms;
            res.sums.decode_ms += t.decode_ms;
            res.sums.decode_steps += t.decode_steps;
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(concurrency);
    for (int w = 0; w < concurrency; ++w) threads.emplace_back(worker, w);
    for (auto& th : threads) th.join();
    const double window_s =
        std::chrono::duration<double>(clock::now() - t_measure).count();

    // merge in worker-index order
    std::vector<double> latencies;
    StageTimings sums;
    for (const auto& res : results) {
        if (!res.error.empty()) throw std::runtime_error(res.error);
        latencies.insert(latencies.end(), res.latencies_ms.begin(), res.latencies_ms.end());
        sums.encode_ms += res.sums.encode_ms;
        sums.vocab_ms += res.sums.vocab_ms;
        sums.decode_ms += res.sums.decode_ms;
    }

    BenchReport rep;
    rep.concurrency = concurrency;
    rep.total_queries = static_cast<long>(latencies.size());
    if (rep.total_queries == 0) return rep;
    rep.si_qps = double(rep.total_queries) / window_s;
    rep.latency_mean_ms = 0;
    for (double v : latencies) rep.latency_mean_ms += v;
    rep.latency_mean_ms /= double(rep.total_queries);
    std::sort(latencies.begin(), latencies.end());
    rep.latency_p50_ms = detail::percentile(latencies, 0.50);
    rep.latency_p95_ms = detail::percentile(latencies, 0.95);
    rep.latency_p99_ms = detail::percentile(latencies, 0.99);
    rep.encode_ms = sums.encode_ms / double(rep.total_queries);
    rep.vocab_ms = sums.vocab_ms / double(rep.total_queries);
    rep.decode_ms = sums.decode_ms / double(rep.total_queries);
    return rep;
}

struct SweepSetting {
    double tau = 0.5;
    int cap = 0;
};

struct SweepRow {
    double tau = 0;
    int cap = 0;
    double voc_size = 0;   // mean active-set size
    double decode_ms = 0;  // mean per query
    double si_qps = 0;     // 1000 / mean end-to-end latency (single instance)
};

// Decodes every question once per setting with identical generation
// settings; emotions cycle deterministically over the taxonomy. Rows come
// back ordered by mean vocabulary size.
template <class T>
std::vector<SweepRow> sweep_vocab_latency(const Checkpoint<T>& ckpt,
                                          const std::vector<std::vector<int>>& questions,
                                          const std::vector<SweepSetting>& settings,
                                          const GenerationConfig& base_cfg) {
    if (questions.empty()) throw std::invalid_argument("sweep: no questions");
    if (settings.empty()) throw std::invalid_argument("sweep: no settings");
    std::vector<SweepRow> rows;
    for (const auto& s : settings) {
        GenerationConfig cfg = base_cfg;
        cfg.dynamic_vocab = true;
        cfg.tau = s.tau;
        cfg.cap = s.cap;
        SweepRow row;
        row.tau = s.tau;
        row.cap = s.cap;
        double total_ms = 0;
        for (size_t i = 0; i < questions.size(); ++i) {
            int e = static_cast<int>(i) % ckpt.taxonomy.size();
            auto r = generate(questions[i], e, ckpt.s2s, &ckpt.vocab_predictor, ckpt.vocab, cfg);
            row.voc_size += double(r.vocab_used.active.size());
            row.decode_ms += r.timings.decode_ms;
            total_ms += r.timings.total_ms();
        }
        row.voc_size /= double(questions.size());
        row.decode_ms /= double(questions.size());
        double mean_ms = total_ms / double(questions.size());
        row.si_qps = mean_ms > 0 ? 1000.0 / mean_ms : 0;
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.voc_size < b.voc_size; });
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "voc_size,decode_ms,si_qps\n";
    for (const auto& r : rows)
        out << r.voc_size << "," << r.decode_ms << "," << r.si_qps << "\n";
}

}  // namespace dverg
