// SPDX-License-Identifier: Apache-2.0
//
// mbtd - multiband time-delay estimation by weighted subspace fitting
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbtd/bench.hpp"
#include "mbtd/crlb.hpp"
#include "mbtd/estimate_io.hpp"
#include "mbtd/seed.hpp"

namespace {

using namespace mbtd;
using nlohmann::json;

enum Exit : int { ok = 0, io_error = 1, config_error = 2, estimation_error = 3 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

void add_common(CLI::App* cmd, Common& c, bool needs_config)
{
    auto* cfg = cmd->add_option("--config", c.config, "scenario file (schema = 1)");
    if (needs_config) {
        cfg->required();
    }
    cmd->add_option("--seed", c.seed, "override the master seed");
    cmd->add_option("--out", c.out, "output file (default: stdout)");
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 256));
}

Scenario scenario_from(const Common& c)
{
    Scenario scn = load_scenario(c.config);
    if (c.seed) {
        scn.master_seed = *c.seed;
    }
    return scn;
}

void deliver(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        write_file_atomic(out, text);
    }
}

json complex_list(const CVector& v)
{
    json a = json::array();
    for (const cplx z : v) {
        a.push_back({{"re", z.real()}, {"im", z.imag()}});
    }
    return a;
}

int cmd_simulate(const Common& c, int trial, std::optional<double> snr, std::optional<int> snapshots)
{
    const Scenario scn = scenario_from(c);
    const BandPlan plan = scn.plan();
    const ProbeConfig probe = scn.probe();
    const MultipathChannel ch = scn.channel(trial);

    const double snr_db = snr ? *snr : scn.axis == SweepAxis::snr ? scn.snr_axis_db.front() : scn.snr_db;
    const int snaps = snapshots ? *snapshots : scn.axis == SweepAxis::snr ? scn.snapshots : scn.snapshot_axis.front();
    if (snaps < 1) {
        throw ConfigError("--snapshots must be >= 1", 0);
    }
    std::vector<double> per_band(scn.per_band_offsets_db.size());
    for (std::size_t i = 0; i < per_band.size(); ++i) {
        per_band[i] = snr_db + scn.per_band_offsets_db[i];
    }
    const NoiseModel noise = sigma_from_snr(ch, plan, probe, per_band);
    const std::uint64_t seed = derive_seed(scn.master_seed, {0x73696d, static_cast<std::uint64_t>(trial)});
    EstimateFile file{simulate_snapshots(ch, plan, probe, noise, seed, snaps), scn.paths(), ch};
    deliver(to_json(file), c.out);
    return ok;
}

int cmd_estimate(const std::string& in, const std::string& out, const std::string& name, int paths, int q_cols,
                 bool unweighted, bool column_weighting)
{
    const auto kind = parse_estimator(name);
    if (!kind) {
        throw ConfigError("unknown estimator '" + name + "'", 0);
    }
    const EstimateFile file = load_estimate_file(in);
    const int k = paths > 0 ? paths : file.paths;
    if (k < 1) {
        throw ConfigError("path count unknown: the file has none and --paths was not given", 0);
    }
    PipelineOptions opts;
    opts.q_cols = q_cols;
    opts.weighted = !unweighted;
    opts.column_weighting = column_weighting;

    json doc;
    doc["estimator"] = name;
    doc["paths"] = k;
    std::vector<double> delays;
    CVector gains;
    if (*kind == EstimatorKind::proposed) {
        const FitResult fit = estimate_proposed(file.snapshots, k, opts);
        delays = fit.delays;
        gains = fit.gains;
        doc["cost"] = fit.cost;
        doc["iterations"] = fit.iterations;
        doc["converged"] = fit.converged;
    } else {
        delays = run_estimator(*kind, file.snapshots, k, opts);
        gains = estimate_gains(delays, file.snapshots);
    }
    doc["delays_s"] = delays;
    doc["gains"] = complex_list(gains);
    if (file.truth) {
        const double ts = file.snapshots.front().plan.sample_period();
        const double err = los_error(file.truth->delays(), delays);
        doc["truth_delays_s"] = file.truth->delays();
        doc["los_error_ts"] = std::isfinite(err) ? json(err / ts) : json(nullptr);
    }
    deliver(doc.dump(2) + "\n", out);
    return ok;
}

int cmd_bench(const Common& c, const std::string& plotdata, const std::string& plot)
{
    const Scenario scn = scenario_from(c);
    const BenchResult res = run_bench(scn, c.threads);
    // Render everything before touching the file system.
    const std::string csv = to_csv(res);
    const std::string pd = plotdata.empty() ? std::string() : to_plotdata(res);
    const std::string svg = plot.empty() ? std::string() : to_svg(res, scn.name.empty() ? "RMSE" : scn.name);
    if (!plotdata.empty()) {
        write_file_atomic(plotdata, pd);
    }
    if (!plot.empty()) {
        write_file_atomic(plot, svg);
    }
    deliver(csv, c.out);
    return ok;
}

int cmd_crlb(const Common& c)
{
    const Scenario scn = scenario_from(c);
    deliver(crlb_csv(scn, crlb_axis(scn, c.threads)), c.out);
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multiband OFDM time-delay estimation: simulate, estimate, benchmark"};
    app.require_subcommand(1);

    Common sim_c;
    int trial = 0;
    std::optional<double> snr;
    std::optional<int> snapshots;
    auto* sim = app.add_subcommand("simulate", "write one simulated multi-snapshot channel estimate (JSON)");
    add_common(sim, sim_c, true);
    sim->add_option("--trial", trial, "trial index selecting the gain realization")->check(CLI::NonNegativeNumber);
    sim->add_option("--snr", snr, "SNR in dB (default: first axis point)");
    sim->add_option("--snapshots", snapshots, "snapshot count (default: from the config)");

    std::string est_in;
    std::string est_out;
    std::string est_name = "proposed";
    int est_paths = 0;
    int est_q = 0;
    bool est_unweighted = false;
    bool est_colw = false;
    auto* est = app.add_subcommand("estimate", "estimate delays and gains from a channel estimate file");
    est->add_option("input", est_in, "file written by 'simulate'")->required();
    est->add_option("--out", est_out, "output file (default: stdout)");
    est->add_option("--estimator", est_name, "proposed, mresprit, esprit or mimusic");
    est->add_option("--paths", est_paths, "number of paths (default: from the file)");
    est->add_option("--q-cols", est_q, "Hankel column count (default: ceil(N/3))");
    est->add_flag("--unweighted", est_unweighted, "ignore per-band noise levels in the fit");
    est->add_flag("--column-weighting", est_colw, "scale subspace columns by their singular values");

    Common bench_c;
    std::string plotdata;
    std::string plot;
    auto* bench = app.add_subcommand("bench", "run a Monte-Carlo scenario and write the RMSE table (CSV)");
    add_common(bench, bench_c, true);
    bench->add_option("--plotdata", plotdata, "also write per-series plot data");
    bench->add_option("--plot", plot, "also write an SVG plot");

    Common crlb_c;
    auto* crlb = app.add_subcommand("crlb", "write the trial-averaged CRLB curve of a scenario (CSV)");
    add_common(crlb, crlb_c, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*sim) {
            return cmd_simulate(sim_c, trial, snr, snapshots);
        }
        if (*est) {
            return cmd_estimate(est_in, est_out, est_name, est_paths, est_q, est_unweighted, est_colw);
        }
        if (*bench) {
            return cmd_bench(bench_c, plotdata, plot);
        }
        return cmd_crlb(crlb_c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const ArgumentError& e) {
        // bad input files and inconsistent parameters
        std::cerr << "input error: " << e.what() << "\n";
        return config_error;
    } catch (const Error& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return estimation_error;
    } catch (const std::system_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return io_error;
    }
}
