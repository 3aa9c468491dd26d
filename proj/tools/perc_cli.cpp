#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "perc/experiment.hpp"

namespace {

namespace fs = std::filesystem;

perc::ExperimentConfig load_config(const std::string& path,
                                   std::uint64_t seed_override,
                                   bool have_seed) {
    std::ifstream in(path);
    if (!in) throw perc::ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw perc::ConfigError("config is not valid JSON: " +
                                std::string(e.what()));
    }
    perc::ExperimentConfig cfg = perc::ExperimentConfig::from_json(j);
    if (have_seed) cfg.seed = seed_override;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "."
                                                      : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw perc::ConfigError("cannot write " + path.string());
    out << content;
}

struct Options {
    std::string config;
    std::string out = ".";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool have_seed = false;
    int threads = 1;
};

int run(const std::string& cmd, const Options& opt) {
    const perc::ExperimentConfig cfg =
        load_config(opt.config, opt.seed, opt.have_seed);
    const fs::path out(opt.out);

    if (cmd == "sample") {
        const perc::SpacePtr space = perc::make_space(cfg.space);
        const perc::RadiusLaw law = perc::RadiusLaw::from_json(cfg.law);
        const double wr = cfg.window_radius > 0
                              ? cfg.window_radius
                              : (cfg.r_grid.empty() ? 1.0 : cfg.r_grid.back());
        const perc::BooleanSample sample = perc::sample_boolean_model(
            *space, cfg.lambda, law, space->origin(), wr, cfg.halo_factor,
            cfg.seed);
        if (opt.format == "binary") {
            const auto buf = sample.to_binary();
            fs::create_directories(out);
            std::ofstream f(out / "sample.bin", std::ios::binary);
            f.write(reinterpret_cast<const char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size()));
        } else {
            write_file(out / "sample.json", sample.to_json().dump(2) + "\n");
        }
        std::cout << "germs: " << sample.germs.size()
                  << "  influence_bound: " << sample.influence_bound << "\n";
        return 0;
    }
    if (cmd == "estimate") {
        const perc::EstimateTable table = perc::run_estimate(
            cfg, opt.threads, (out / "checkpoints").string());
        write_file(out / "estimate.csv", table.to_csv());
        if (opt.format == "json") {
            write_file(out / "estimate.json", table.to_json().dump(2) + "\n");
        }
        write_file(out / "tail.svg", perc::tail_plot_svg(table));
        std::cout << "estimate: " << table.rows.size() << " rows, n = "
                  << table.n << "\n";
        return 0;
    }
    if (cmd == "sweep") {
        const perc::SweepTable table = perc::run_sweep(cfg, opt.threads);
        write_file(out / "sweep.csv", table.to_csv());
        if (opt.format == "json") {
            write_file(out / "sweep.json", table.to_json().dump(2) + "\n");
        }
        std::cout << "sweep: " << table.cells.size() << " cells\n";
        return 0;
    }
    if (cmd == "verify") {
        const perc::VerifyReport report = perc::run_verify(cfg);
        write_file(out / "verify.json", report.to_json().dump(2) + "\n");
        for (const auto& c : report.checks) {
            std::cout << (c.passed ? "pass  " : "FAIL  ") << c.name << "\n";
        }
        return report.all_passed ? 0 : 3;
    }
    if (cmd == "bounds") {
        const perc::SpacePtr space = perc::make_space(cfg.space);
        const perc::RadiusLaw law = perc::RadiusLaw::from_json(cfg.law);
        const auto& desc = space->descriptor();
        std::vector<double> grid = cfg.r_grid;
        if (grid.empty()) {
            for (double r = 0.01; r <= 100.0; r *= std::sqrt(10.0)) {
                grid.push_back(r);
            }
        }
        const perc::BoundSheet sheet = perc::make_bound_sheet(
            cfg.lambda, desc.regularity_constant, desc.ahlfors_exponent,
            desc.sigma, law, cfg.c1, grid);
        write_file(out / "bounds.csv", sheet.to_csv());
        if (opt.format == "json") {
            write_file(out / "bounds.json", sheet.to_json().dump(2) + "\n");
        }
        std::cout << "bounds: lambda0 = " << sheet.lambda0_value << "\n";
        return 0;
    }
    throw perc::UsageError("unknown subcommand: " + cmd);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson Boolean percolation on regular metric spaces"};
    app.require_subcommand(1);

    Options opt;
    std::string cmd;
    for (const char* name : {"sample", "estimate", "sweep", "verify", "bounds"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "JSON experiment config")
            ->required();
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads, "worker thread count");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--format", opt.format, "csv|json|binary");
        sub->callback([&cmd, name] { cmd = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    opt.have_seed = app.get_subcommand(cmd)->count("--seed") > 0;

    try {
        return run(cmd, opt);
    } catch (const perc::TruncationAbort& e) {
        std::cerr << "truncation abort: " << e.what() << "\n";
        return 4;
    } catch (const perc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const perc::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const perc::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const perc::GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
