#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "perc/bounds.hpp"
#include "perc/nets.hpp"
#include "perc/percolation.hpp"
#include "perc/space_factory.hpp"

namespace perc {

// Raised when the far-ball influence bound exceeds the configured
// ceiling, i.e. truncating the model at the halo could bias the tail
// estimates beyond the tolerated amount.
struct TruncationAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    nlohmann::json space;
    nlohmann::json law;
    double lambda = 0.0;
    std::vector<double> lambda_grid;           // sweep cells
    std::vector<nlohmann::json> law_grid;      // sweep cells
    std::vector<double> r_grid;
    long long replications = 1000;
    int anchors = 16;
    std::uint64_t seed = 1;
    double halo_factor = 3.0;
    double window_radius = 0.0;                // 0: use max r_grid
    double influence_ceiling = 0.05;
    std::optional<double> beta;                // E[min(M, window)^beta]
    double c1 = 1.0;                           // chaining constant
    int trials = 200;                          // verify sample sizes
    std::size_t probe_budget = 4000;
    double cavalieri_p = 1.0;
    double cavalieri_q = 1.0;

    nlohmann::json to_json() const {
        nlohmann::json j{{"space", space},
                         {"law", law},
                         {"lambda", lambda},
                         {"r_grid", r_grid},
                         {"replications", replications},
                         {"anchors", anchors},
                         {"seed", seed},
                         {"halo_factor", halo_factor},
                         {"window_radius", window_radius},
                         {"influence_ceiling", influence_ceiling},
                         {"c1", c1},
                         {"trials", trials},
                         {"probe_budget", probe_budget},
                         {"cavalieri_p", cavalieri_p},
                         {"cavalieri_q", cavalieri_q}};
        if (!lambda_grid.empty()) j["lambda_grid"] = lambda_grid;
        if (!law_grid.empty()) j["law_grid"] = law_grid;
        if (beta) j["beta"] = *beta;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (!j.contains("space")) throw ConfigError("config needs a space");
        c.space = j.at("space");
        if (j.contains("law")) c.law = j.at("law");
        c.lambda = j.value("lambda", 0.0);
        if (j.contains("lambda_grid")) {
            c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
            for (double l : c.lambda_grid) {
                if (!(l > 0)) throw ConfigError("lambda grid must be positive");
            }
        }
        if (j.contains("law_grid")) {
            for (const auto& lj : j.at("law_grid")) c.law_grid.push_back(lj);
        }
        if (j.contains("r_grid")) {
            c.r_grid = j.at("r_grid").get<std::vector<double>>();
        }
        for (std::size_t i = 0; i < c.r_grid.size(); ++i) {
            if (!(c.r_grid[i] > 0)) {
                throw ConfigError("r grid entries must be positive");
            }
            if (i > 0 && !(c.r_grid[i] > c.r_grid[i - 1])) {
                throw ConfigError("r grid must be strictly increasing");
            }
        }
        c.replications = j.value("replications", 1000LL);
        if (c.replications < 1) throw ConfigError("replications must be >= 1");
        c.anchors = j.value("anchors", 16);
        if (c.anchors < 1) throw ConfigError("anchors must be >= 1");
        c.seed = j.value("seed", std::uint64_t{1});
        c.halo_factor = j.value("halo_factor", 3.0);
        if (!(c.halo_factor >= 1.0)) throw ConfigError("halo factor must be >= 1");
        c.window_radius = j.value("window_radius", 0.0);
        c.influence_ceiling = j.value("influence_ceiling", 0.05);
        if (j.contains("beta")) c.beta = j.at("beta").get<double>();
        c.c1 = j.value("c1", 1.0);
        if (!(c.c1 >= 1.0)) throw ConfigError("c1 must be >= 1");
        c.trials = j.value("trials", 200);
        c.probe_budget = j.value("probe_budget", std::size_t{4000});
        c.cavalieri_p = j.value("cavalieri_p", 1.0);
        c.cavalieri_q = j.value("cavalieri_q", 1.0);
        return c;
    }
};

namespace detail {

// Like cluster_radius, but reusing component labels computed once per
// realization so many anchors share one union-find pass.
inline ClusterReport anchor_report(const Space& space, const BooleanSample& s,
                                   const std::vector<std::size_t>& label,
                                   const Point& anchor) {
    ClusterReport rep;
    rep.anchor = anchor;
    rep.envelope_flag = space.sup_distance_is_envelope();
    std::size_t anchor_comp = 0;
    bool covered = false;
    for (std::size_t i = 0; i < s.germs.size(); ++i) {
        if (space.distance(anchor, s.germs[i].center) < s.germs[i].radius) {
            anchor_comp = label[i];
            covered = true;
            break;
        }
    }
    if (!covered) return rep;
    for (std::size_t i = 0; i < s.germs.size(); ++i) {
        if (label[i] != anchor_comp) continue;
        ++rep.component_size;
        rep.m_value = std::max(
            rep.m_value, space.ball_sup_distance(anchor, s.germs[i].center,
                                                 s.germs[i].radius));
        const double to_boundary =
            s.halo_radius - space.distance(s.window_center, s.germs[i].center);
        if (to_boundary < s.germs[i].radius) rep.censored = true;
    }
    if (s.influence_bound > 0 && !s.law.bounded()) rep.censored = true;
    return rep;
}

inline std::vector<Point> make_anchors(const Space& space, int count,
                                       double spread, std::uint64_t seed) {
    std::vector<Point> anchors{space.origin()};
    for (int j = 1; j < count; ++j) {
        Rng rng = make_stream(seed ^ 0xA17C4ED5F00DULL, static_cast<std::uint64_t>(j));
        anchors.push_back(space.sample_point(space.origin(), spread, rng));
    }
    return anchors;
}

// Runs fn(rep) for rep in [begin, end) across the requested number of
// threads.  fn must only touch per-rep slots or thread-local state that
// the caller merges with an order-independent reduction, so results do
// not depend on the thread count.
template <typename Fn>
void parallel_reps(long long begin, long long end, int threads, Fn&& fn) {
    const int t = std::max(1, threads);
    if (t == 1 || end - begin <= 1) {
        for (long long rep = begin; rep < end; ++rep) fn(rep);
        return;
    }
    std::atomic<long long> next(begin);
    auto worker = [&] {
        for (;;) {
            const long long rep = next.fetch_add(1);
            if (rep >= end) break;
            fn(rep);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline std::string format_value(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

struct EstimateRow {
    double r = 0.0;
    double p_upper = 0.0;
    double se_upper = 0.0;
    double p_lower = 0.0;
    double se_lower = 0.0;
    double sup_upper = 0.0; // max over anchors of the per-anchor upper rate
    double envelope = 1.0;  // certified tail bound at this r
    double ultra_exact = std::nan(""); // closed form on ultrametric backends
};

struct EstimateTable {
    std::vector<EstimateRow> rows;
    long long n = 0;           // pooled Bernoulli count per row
    long long replications = 0;
    int anchors = 0;
    double lambda = 0.0;
    double influence_bound = 0.0;
    double e_min_beta = std::nan(""); // E[min(M, window)^beta] when configured
    nlohmann::json config;

    // Fixed column order; this file is the normative output.
    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "r,p_upper,se_upper,p_lower,se_lower,sup_upper,envelope,"
              "ultra_exact,influence_bound,e_min_beta\n";
        for (const auto& row : rows) {
            os << row.r << ',' << row.p_upper << ',' << row.se_upper << ','
               << row.p_lower << ',' << row.se_lower << ',' << row.sup_upper
               << ',' << row.envelope << ',' << row.ultra_exact << ','
               << influence_bound << ',' << e_min_beta << '\n';
        }
        return os.str();
    }

    nlohmann::json to_json() const {
        nlohmann::json rows_j = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json rj{{"r", row.r},
                              {"p_upper", row.p_upper},
                              {"se_upper", row.se_upper},
                              {"p_lower", row.p_lower},
                              {"se_lower", row.se_lower},
                              {"sup_upper", row.sup_upper},
                              {"envelope", row.envelope}};
            if (std::isfinite(row.ultra_exact)) rj["ultra_exact"] = row.ultra_exact;
            rows_j.push_back(std::move(rj));
        }
        nlohmann::json j{{"rows", std::move(rows_j)},
                         {"n", n},
                         {"replications", replications},
                         {"anchors", anchors},
                         {"lambda", lambda},
                         {"influence_bound", influence_bound},
                         {"config", config}};
        if (std::isfinite(e_min_beta)) j["e_min_beta"] = e_min_beta;
        return j;
    }
};

// Cosmetic tail plot: empirical brackets and the certified envelope on
// log-radius axes.
inline std::string tail_plot_svg(const EstimateTable& table) {
    const double w = 640, h = 420, m = 50;
    if (table.rows.empty()) return "<svg xmlns='http://www.w3.org/2000/svg'/>";
    double lx0 = std::log10(table.rows.front().r);
    double lx1 = std::log10(table.rows.back().r);
    if (lx1 <= lx0) lx1 = lx0 + 1.0;
    auto X = [&](double r) {
        return m + (std::log10(r) - lx0) / (lx1 - lx0) * (w - 2 * m);
    };
    auto Y = [&](double p) { return h - m - p * (h - 2 * m); };
    auto poly = [&](const char* color, auto&& get) {
        std::ostringstream os;
        os << "<polyline fill='none' stroke='" << color
           << "' stroke-width='1.5' points='";
        for (const auto& row : table.rows) {
            os << X(row.r) << ',' << Y(get(row)) << ' ';
        }
        os << "'/>\n";
        return os.str();
    };
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
       << "' height='" << h << "'>\n"
       << "<rect width='100%' height='100%' fill='white'/>\n"
       << "<line x1='" << m << "' y1='" << h - m << "' x2='" << w - m
       << "' y2='" << h - m << "' stroke='black'/>\n"
       << "<line x1='" << m << "' y1='" << m << "' x2='" << m << "' y2='"
       << h - m << "' stroke='black'/>\n"
       << poly("#c0392b", [](const EstimateRow& r) { return r.p_upper; })
       << poly("#2980b9", [](const EstimateRow& r) { return r.p_lower; })
       << poly("#7f8c8d", [](const EstimateRow& r) { return r.envelope; })
       << "<text x='" << w / 2 << "' y='" << h - 12
       << "' font-size='12'>log10 r</text>\n"
       << "<text x='12' y='" << m - 8
       << "' font-size='12'>tail probability</text>\n"
       << "</svg>\n";
    return os.str();
}

// Tail estimator for M(anchor).  Counts are inclusive (M >= r), which
// agrees with the strict tail off the distance spectrum and with the
// ultrametric closed form on it.  Censored reps count as exceeding in
// the upper bracket and are dropped from the lower one.
inline EstimateTable run_estimate(const ExperimentConfig& cfg, int threads = 1,
                                  const std::string& checkpoint_dir = "") {
    if (cfg.r_grid.empty()) throw ConfigError("estimate needs an r grid");
    if (!(cfg.lambda > 0)) throw ConfigError("estimate needs lambda > 0");
    const SpacePtr space = make_space(cfg.space);
    const RadiusLaw law = RadiusLaw::from_json(cfg.law);
    const double wr =
        cfg.window_radius > 0 ? cfg.window_radius : cfg.r_grid.back();
    const double halo = cfg.halo_factor * wr;
    const SpaceDescriptor& desc = space->descriptor();

    EstimateTable table;
    table.config = cfg.to_json();
    table.lambda = cfg.lambda;
    table.replications = cfg.replications;
    table.anchors = cfg.anchors;
    table.influence_bound =
        far_ball_influence_bound(*space, cfg.lambda, law, wr, halo);
    if (table.influence_bound > cfg.influence_ceiling) {
        throw TruncationAbort(
            "far-ball influence bound " +
            detail::format_value(table.influence_bound) +
            " exceeds the ceiling " +
            detail::format_value(cfg.influence_ceiling) +
            "; enlarge the halo factor or lower lambda");
    }

    const auto anchors =
        detail::make_anchors(*space, cfg.anchors, wr / 2.0, cfg.seed);
    const std::size_t A = anchors.size();
    const std::size_t R = cfg.r_grid.size();

    std::vector<long long> upper(A * R, 0), lower(A * R, 0);
    std::vector<double> beta_rep;
    if (cfg.beta) beta_rep.assign(static_cast<std::size_t>(cfg.replications), 0.0);

    long long done = 0;
    const std::filesystem::path ckdir(checkpoint_dir);
    const std::filesystem::path manifest = ckdir / "manifest.json";
    if (!checkpoint_dir.empty() && std::filesystem::exists(manifest)) {
        std::ifstream in(manifest);
        nlohmann::json j;
        in >> j;
        // The replication count may grow between runs: a longer run
        // extends the shorter run's counts instead of restarting.
        nlohmann::json stored = j.value("config", nlohmann::json{});
        nlohmann::json want = table.config;
        stored.erase("replications");
        want.erase("replications");
        const long long stored_done = j.value("completed", 0LL);
        if (stored.dump() == want.dump() &&
            stored_done <= cfg.replications) {
            done = stored_done;
            upper = j.at("upper").get<std::vector<long long>>();
            lower = j.at("lower").get<std::vector<long long>>();
            if (cfg.beta && j.contains("beta_partial")) {
                auto partial = j.at("beta_partial").get<std::vector<double>>();
                std::copy(partial.begin(), partial.end(), beta_rep.begin());
            }
        }
    }

    std::mutex merge_mtx;
    const long long chunk = 1000;
    for (long long start = done; start < cfg.replications; start += chunk) {
        const long long end = std::min(start + chunk, cfg.replications);
        std::vector<std::vector<long long>> locals_u, locals_l;
        auto body = [&](long long rep) {
            const BooleanSample sample = sample_boolean_model(
                *space, cfg.lambda, law, space->origin(), wr, cfg.halo_factor,
                cfg.seed, static_cast<std::uint64_t>(rep));
            const auto label = connected_components(*space, sample.germs);
            std::vector<long long> lu(A * R, 0), ll(A * R, 0);
            double beta_sum = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const ClusterReport rep_a =
                    detail::anchor_report(*space, sample, label, anchors[a]);
                for (std::size_t ri = 0; ri < R; ++ri) {
                    const bool exceeds = rep_a.m_value >= cfg.r_grid[ri];
                    if (exceeds || rep_a.censored) lu[a * R + ri] += 1;
                    if (exceeds && !rep_a.censored) ll[a * R + ri] += 1;
                }
                if (cfg.beta) {
                    beta_sum += std::pow(std::min(rep_a.m_value, wr), *cfg.beta);
                }
            }
            if (cfg.beta) beta_rep[static_cast<std::size_t>(rep)] = beta_sum;
            std::lock_guard<std::mutex> lock(merge_mtx);
            for (std::size_t i = 0; i < A * R; ++i) {
                upper[i] += lu[i];
                lower[i] += ll[i];
            }
        };
        detail::parallel_reps(start, end, threads, body);
        done = end;
        if (!checkpoint_dir.empty()) {
            std::filesystem::create_directories(ckdir);
            nlohmann::json j{{"config", table.config},
                             {"completed", done},
                             {"upper", upper},
                             {"lower", lower}};
            if (cfg.beta) {
                j["beta_partial"] = std::vector<double>(
                    beta_rep.begin(), beta_rep.begin() + done);
            }
            std::ofstream(manifest) << j.dump(2) << '\n';
            const BooleanSample last = sample_boolean_model(
                *space, cfg.lambda, law, space->origin(), wr, cfg.halo_factor,
                cfg.seed, static_cast<std::uint64_t>(done - 1));
            const auto buf = last.to_binary();
            std::ofstream(ckdir / ("sample_" + std::to_string(done) + ".bin"),
                          std::ios::binary)
                .write(reinterpret_cast<const char*>(buf.data()),
                       static_cast<std::streamsize>(buf.size()));
        }
    }

    table.n = cfg.replications * static_cast<long long>(A);
    const double n = static_cast<double>(table.n);
    for (std::size_t ri = 0; ri < R; ++ri) {
        EstimateRow row;
        row.r = cfg.r_grid[ri];
        long long cu = 0, cl = 0;
        for (std::size_t a = 0; a < A; ++a) {
            cu += upper[a * R + ri];
            cl += lower[a * R + ri];
            row.sup_upper = std::max(
                row.sup_upper, static_cast<double>(upper[a * R + ri]) /
                                   static_cast<double>(cfg.replications));
        }
        row.p_upper = static_cast<double>(cu) / n;
        row.p_lower = static_cast<double>(cl) / n;
        row.se_upper = std::sqrt(row.p_upper * (1.0 - row.p_upper) / n);
        row.se_lower = std::sqrt(row.p_lower * (1.0 - row.p_lower) / n);
        // Tail bound: P(M > 9 sigma^2 r') <= g(r') + h(r') at the base
        // scale r' = r / (9 sigma^2).
        const double rr = row.r / (9.0 * desc.sigma * desc.sigma);
        const EventBounds b = event_bounds(cfg.lambda, desc.regularity_constant,
                                           desc.ahlfors_exponent, desc.sigma,
                                           law, rr);
        row.envelope = std::min(1.0, b.g_bound + b.h_bound);
        if (space->ultrametric()) {
            row.ultra_exact =
                ultrametric_tail_bound(*space, cfg.lambda, law, row.r).exact;
        }
        table.rows.push_back(row);
    }
    if (cfg.beta) {
        double total = 0.0;
        for (double v : beta_rep) total += v;
        table.e_min_beta = total / n;
    }
    return table;
}

struct SweepCell {
    double lambda = 0.0;
    nlohmann::json law;
    bool s_moment_finite = true;
    CoverVerdict verdict = CoverVerdict::PROPER_SUBSET;
    double p_upper_rmax = 0.0;
    double p_lower_rmax = 0.0;
    double cover_freq = 0.0;        // single ball covering B(o,1)
    double cover_bound = 0.0;       // certified lower bound for the above
    double influence_bound = 0.0;
    long long n = 0;
};

struct SweepTable {
    std::vector<SweepCell> cells;
    nlohmann::json config;

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "lambda,law,s_moment_finite,verdict,p_upper_rmax,p_lower_rmax,"
              "cover_freq,cover_lower_bound,influence_bound,n\n";
        for (const auto& c : cells) {
            os << c.lambda << ',' << c.law.dump() << ','
               << (c.s_moment_finite ? 1 : 0) << ','
               << (c.verdict == CoverVerdict::COVERS_EVERYTHING
                       ? "covers_everything"
                       : "proper_subset")
               << ',' << c.p_upper_rmax << ',' << c.p_lower_rmax << ','
               << c.cover_freq << ',' << c.cover_bound << ','
               << c.influence_bound << ',' << c.n << '\n';
        }
        return os.str();
    }

    nlohmann::json to_json() const {
        nlohmann::json cells_j = nlohmann::json::array();
        for (const auto& c : cells) {
            cells_j.push_back(
                {{"lambda", c.lambda},
                 {"law", c.law},
                 {"s_moment_finite", c.s_moment_finite},
                 {"verdict", c.verdict == CoverVerdict::COVERS_EVERYTHING
                                 ? "covers_everything"
                                 : "proper_subset"},
                 {"p_upper_rmax", c.p_upper_rmax},
                 {"p_lower_rmax", c.p_lower_rmax},
                 {"cover_freq", c.cover_freq},
                 {"cover_lower_bound", c.cover_bound},
                 {"influence_bound", c.influence_bound},
                 {"n", c.n}});
        }
        return {{"cells", std::move(cells_j)}, {"config", config}};
    }
};

// Phase sweep over (lambda, law) cells: occupied-set tail at the
// largest configured r plus the covered/vacant dichotomy with its
// single-ball witness frequency at unit scale.  Cells whose law has an
// infinite s-moment cover everything and are exempt from the influence
// ceiling (far balls are the phenomenon there, not a bias).
inline SweepTable run_sweep(const ExperimentConfig& cfg, int threads = 1) {
    if (cfg.r_grid.empty()) throw ConfigError("sweep needs an r grid");
    std::vector<double> lambdas = cfg.lambda_grid;
    if (lambdas.empty()) {
        if (!(cfg.lambda > 0)) throw ConfigError("sweep needs lambda values");
        lambdas.push_back(cfg.lambda);
    }
    std::vector<nlohmann::json> laws = cfg.law_grid;
    if (laws.empty()) {
        if (cfg.law.is_null()) throw ConfigError("sweep needs law values");
        laws.push_back(cfg.law);
    }

    const SpacePtr space = make_space(cfg.space);
    const SpaceDescriptor& desc = space->descriptor();
    SweepTable table;
    table.config = cfg.to_json();

    const double r_max = cfg.r_grid.back();
    const double wr =
        cfg.window_radius > 0 ? cfg.window_radius : std::max(r_max, 1.0);
    const Point o = space->origin();

    std::uint64_t cell_index = 0;
    for (const auto& law_j : laws) {
        const RadiusLaw law = RadiusLaw::from_json(law_j);
        const double sup =
            law.bounded() ? law.support_sup() : law.quantile(1.0 - 1e-6);
        // A witness ball covering B(o,1) can sit up to sup - 1 away, so
        // the halo must reach that far.
        const double hf =
            std::max(cfg.halo_factor, (sup + 1.0) / wr);
        for (double lambda : lambdas) {
            SweepCell cell;
            cell.lambda = lambda;
            cell.law = law_j;
            cell.s_moment_finite =
                std::isfinite(law.moment(desc.ahlfors_exponent));
            cell.verdict = whole_cover_dichotomy(law, desc.ahlfors_exponent);
            cell.cover_bound = cover_lower_bound(
                lambda, desc.regularity_constant, desc.ahlfors_exponent, law,
                1.0);
            cell.influence_bound =
                far_ball_influence_bound(*space, lambda, law, wr, hf * wr);
            if (cell.s_moment_finite &&
                cell.influence_bound > cfg.influence_ceiling) {
                throw TruncationAbort(
                    "sweep cell lambda=" + detail::format_value(lambda) +
                    " influence bound " +
                    detail::format_value(cell.influence_bound) +
                    " exceeds the ceiling");
            }
            cell.n = cfg.replications;

            std::mutex mtx;
            long long cu = 0, cl = 0, cover = 0;
            const std::uint64_t cell_seed =
                splitmix64(cfg.seed ^ (0x5EEDC311ULL + cell_index));
            auto body = [&](long long rep) {
                const BooleanSample sample = sample_boolean_model(
                    *space, lambda, law, o, wr, hf, cell_seed,
                    static_cast<std::uint64_t>(rep));
                const ClusterReport cr = cluster_radius(*space, sample, o);
                const bool exceeds = cr.m_value >= r_max;
                const bool covered = single_ball_covers(*space, sample, o, 1.0);
                std::lock_guard<std::mutex> lock(mtx);
                if (exceeds || cr.censored) ++cu;
                if (exceeds && !cr.censored) ++cl;
                if (covered) ++cover;
            };
            detail::parallel_reps(0, cfg.replications, threads, body);
            cell.p_upper_rmax = static_cast<double>(cu) /
                                static_cast<double>(cfg.replications);
            cell.p_lower_rmax = static_cast<double>(cl) /
                                static_cast<double>(cfg.replications);
            cell.cover_freq = static_cast<double>(cover) /
                              static_cast<double>(cfg.replications);
            table.cells.push_back(std::move(cell));
            ++cell_index;
        }
    }
    return table;
}

struct VerifyCheck {
    std::string name;
    bool passed = false;
    nlohmann::json details;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_passed = true;

    nlohmann::json to_json() const {
        nlohmann::json cj = nlohmann::json::array();
        for (const auto& c : checks) {
            cj.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"details", c.details}});
        }
        return {{"checks", std::move(cj)}, {"all_passed", all_passed}};
    }
};

// Constructive geometry audit of a configured space: regularity fit,
// uniform perfectness, covering-number scaling, the separated-net pair,
// the layer-cake identity of the radius law, and the recursion
// certificate at a certified-subcritical intensity.
inline VerifyReport run_verify(const ExperimentConfig& cfg) {
    const SpacePtr space = make_space(cfg.space);
    const SpaceDescriptor& desc = space->descriptor();
    const double s = desc.ahlfors_exponent;
    VerifyReport report;
    auto add = [&](std::string name, bool passed, nlohmann::json details) {
        report.all_passed = report.all_passed && passed;
        report.checks.push_back({std::move(name), passed, std::move(details)});
    };

    {
        std::vector<double> grid = cfg.r_grid;
        if (grid.empty()) grid = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
        const AhlforsReport a =
            check_ahlfors(*space, std::max(cfg.trials, 100), grid, cfg.seed);
        const bool ok = a.violations == 0 && std::abs(a.s_hat - s) <= 0.1 * s;
        add("ahlfors_regularity", ok,
            {{"s_hat", a.s_hat},
             {"s_declared", s},
             {"c_v_hat", a.c_v_hat},
             {"violations", a.violations}});
    }
    {
        const PerfectnessReport p = check_uniformly_perfect(
            *space, desc.sigma, std::max(10, cfg.trials / 10), cfg.seed);
        add("uniformly_perfect", p.ok,
            {{"sigma", desc.sigma}, {"worst_r", p.worst_r}});
    }
    {
        const CoveringFit fit = covering_fit(*space, space->origin(), 1.0,
                                             cfg.probe_budget, cfg.seed);
        const bool ok = std::abs(fit.net_exponent - s) <= 0.35 * s;
        add("covering_numbers", ok,
            {{"net_exponent", fit.net_exponent},
             {"s_declared", s},
             {"counts", fit.counts}});
    }
    {
        bool ok = false;
        nlohmann::json details;
        try {
            const auto [K, L] = nets_K_L(*space, space->origin(), 0.1,
                                         desc.sigma, cfg.probe_budget,
                                         cfg.seed ^ 0x6B6CULL);
            ok = K.passed && L.passed;
            details = {{"k_cardinality", K.cardinality},
                       {"l_cardinality", L.cardinality},
                       {"k_passed", K.passed},
                       {"l_passed", L.passed}};
        } catch (const std::exception& e) {
            details = {{"error", e.what()}};
        }
        add("separated_nets", ok, std::move(details));
    }
    if (!cfg.law.is_null()) {
        const RadiusLaw law = RadiusLaw::from_json(cfg.law);
        const CavalieriReport c =
            cavalieri_residual(law, cfg.cavalieri_p, cfg.cavalieri_q);
        const bool finite = std::isfinite(c.lhs);
        const bool ok = (!finite || c.residual <= 1e-6) &&
                        c.worst_violation <= 1e-12;
        add("layer_cake_identity", ok,
            {{"residual", c.residual},
             {"lhs", c.lhs},
             {"rhs", c.rhs},
             {"worst_violation", c.worst_violation}});
    }
    if (!cfg.law.is_null()) {
        const RadiusLaw law = RadiusLaw::from_json(cfg.law);
        const double c_v = desc.regularity_constant;
        const Lambda0Result l0 = lambda0(cfg.c1, c_v, s, desc.sigma, law);
        nlohmann::json details{{"lambda0", l0.value},
                               {"no_subcritical", l0.no_subcritical}};
        bool ok = false;
        if (!l0.no_subcritical) {
            const double lam = l0.value / 2.0;
            auto f0 = [&](double r) {
                return cfg.c1 * event_bounds(lam, c_v, s, desc.sigma, law, r)
                                    .g_bound;
            };
            auto g = [&](double r) {
                return cfg.c1 * event_bounds(lam, c_v, s, desc.sigma, law, r)
                                    .htilde_bound;
            };
            const RecursionCertificate cert =
                recursion_certify(f0, g, std::pow(desc.sigma, 3.0));
            ok = cert.accepted && cert.decays;
            details["accepted"] = cert.accepted;
            details["decays"] = cert.decays;
            if (cert.accepted) details["final_envelope"] = cert.envelope.back();
        }
        add("recursion_certificate", ok, std::move(details));
    }
    return report;
}

} // namespace perc
