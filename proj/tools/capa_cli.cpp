// capa: command-line front end for anomaly detection, simulation studies,
// runtime benchmarks and transit period scans.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "capa/capa.hpp"

namespace {

using nlohmann::json;

constexpr const char* tool_version = "1.0.0";
constexpr int exit_input = 2;
constexpr int exit_numerical = 3;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw capa::InvalidInput("cannot open input file '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json manifest(const std::string& command, json config, const std::string& digest, double seconds,
              std::vector<std::uint64_t> seeds = {}) {
    json m = {{"command", command},
              {"config", std::move(config)},
              {"tool_version", tool_version},
              {"duration_seconds", seconds},
              {"seeds", seeds}};
    m["input_sha256"] = digest.empty() ? json(nullptr) : json(digest);
    return m;
}

// Writes `body` to `path`, or stdout when path is empty. CSV files get a
// sidecar manifest.
void emit(const std::string& path, const std::string& body, const json* sidecar) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw capa::InvalidInput("cannot write output file '" + path + "'");
    }
    out << body;
    if (sidecar) {
        std::ofstream m(path + ".manifest.json");
        m << sidecar->dump(2) << '\n';
    }
}

struct CapaFlags {
    std::string beta;
    std::string beta_prime;
    std::optional<double> gamma;
    double collective_guard = 0.0;
    std::size_t min_seg_len = 10;
    std::optional<std::size_t> max_seg_len;
    std::optional<double> mu0;
    std::optional<double> sigma0;
    bool raw_iqr = false;
    bool no_pruning = false;

    void add(CLI::App& app) {
        app.add_option("--beta", beta, "collective penalty: a value or a multiple of log n, e.g. 4logn");
        app.add_option("--beta-prime", beta_prime, "point penalty: a value or a multiple of log n, e.g. 3logn");
        app.add_option("--gamma", gamma, "point-cost guard in (0, 1]");
        app.add_option("--collective-guard", collective_guard, "variance guard for collective segments")
            ->capture_default_str();
        app.add_option("--min-seg-len", min_seg_len, "minimum collective segment length")->capture_default_str();
        app.add_option("--max-seg-len", max_seg_len, "maximum collective segment length");
        app.add_option("--mu0", mu0, "known typical mean (requires --sigma0)");
        app.add_option("--sigma0", sigma0, "known typical standard deviation (requires --mu0)");
        app.add_flag("--raw-iqr", raw_iqr, "use the raw IQR as the robust scale");
        app.add_flag("--no-pruning", no_pruning, "disable candidate pruning");
    }

    capa::CapaConfig build(std::size_t n) const {
        capa::CapaConfig c;
        if (!beta.empty()) {
            c.beta = capa::io::parse_penalty(beta, n);
        }
        if (!beta_prime.empty()) {
            c.beta_prime = capa::io::parse_penalty(beta_prime, n);
        }
        c.gamma = gamma;
        c.collective_guard = collective_guard;
        c.min_seg_len = min_seg_len;
        c.max_seg_len = max_seg_len;
        c.pruning = !no_pruning;
        c.scale = raw_iqr ? capa::robust::ScaleConvention::raw_iqr : capa::robust::ScaleConvention::normal_consistent;
        if (mu0.has_value() != sigma0.has_value()) {
            throw capa::InvalidInput("--mu0 and --sigma0 must be given together");
        }
        if (mu0) {
            c.known_params = capa::TypicalParams{*mu0, *sigma0};
        }
        return c;
    }
};

void warn_penalty_order(const capa::ResolvedConfig& c) {
    if (c.beta_prime > c.beta) {
        std::cerr << "warning: point penalty " << c.beta_prime << " exceeds collective penalty " << c.beta << '\n';
    }
}

struct DetectCmd {
    std::string input;
    std::string output;
    std::string format = "json";
    CapaFlags flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("detect", "detect collective and point anomalies in a CSV series");
        app->add_option("input", input, "CSV with one column (value) or two (time,value)")->required();
        app->add_option("-o,--output", output, "output path (JSON) or prefix (CSV); stdout when absent");
        app->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
        flags.add(*app);
        app->callback([this] { run(); });
    }

    void run() const {
        const Stopwatch clock;
        const std::string bytes = read_file(input);
        std::istringstream in(bytes);
        const auto series = capa::io::read_series_csv(in);
        const auto n = capa::observed(series).size();
        const auto det = capa::detect(series, flags.build(n));
        warn_penalty_order(det.config);
        const auto m = manifest("detect", det.config, sha256_hex(bytes), clock.seconds());
        if (format == "json") {
            json j = det;
            j["manifest"] = m;
            emit(output, j.dump(2) + "\n", nullptr);
            return;
        }
        std::ostringstream coll, pts;
        capa::io::write_collective_csv(coll, det);
        capa::io::write_points_csv(pts, det);
        if (output.empty()) {
            std::cout << coll.str() << '\n' << pts.str();
            return;
        }
        emit(output + "_collective.csv", coll.str(), &m);
        emit(output + "_points.csv", pts.str(), &m);
    }
};

struct SimulateCmd {
    capa::sim::Scenario scenario;
    std::string method = "capa";
    std::size_t replicates = 100;
    std::size_t tolerance = 20;
    std::size_t min_seg_len = 10;
    std::string beta;
    std::string beta_prime;
    unsigned threads = capa::default_thread_count();
    std::string output;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("simulate", "evaluate a detector on simulated epidemic changes");
        app->add_option("--n", scenario.n, "series length")->capture_default_str();
        app->add_option("--rate", scenario.anomaly_rate, "rate at which anomalies start")->capture_default_str();
        app->add_option("--mean-length", scenario.mean_length, "Poisson mean of anomaly lengths")->capture_default_str();
        app->add_option("--a", scenario.a, "sd of anomalous means (0: no mean change)")->capture_default_str();
        app->add_option("--b", scenario.b, "variance-change scale (0: no variance change)")->capture_default_str();
        app->add_option("--points", scenario.n_point_anomalies, "number of point anomalies")->capture_default_str();
        app->add_option("--point-sd", scenario.point_anomaly_sd, "sd of point anomalies")->capture_default_str();
        app->add_option("--seed", scenario.seed, "seed of the first replicate")->capture_default_str();
        app->add_option("--method", method, "capa or pelt")->check(CLI::IsMember({"capa", "pelt"}))->capture_default_str();
        app->add_option("--replicates", replicates, "number of replicates")->capture_default_str();
        app->add_option("--tolerance", tolerance, "matching tolerance in observations")->capture_default_str();
        app->add_option("--min-seg-len", min_seg_len, "minimum segment length")->capture_default_str();
        app->add_option("--beta", beta, "collective (capa) or changepoint (pelt) penalty");
        app->add_option("--beta-prime", beta_prime, "point penalty (capa)");
        app->add_option("--threads", threads, "worker threads; defaults to CAPA_THREADS")->capture_default_str();
        app->add_option("-o,--output", output, "CSV output path; stdout when absent");
        app->callback([this] { run(); });
    }

    void run() const {
        const Stopwatch clock;
        capa::sim::MethodConfig m;
        m.method = method == "pelt" ? capa::sim::Method::pelt : capa::sim::Method::capa;
        m.min_seg_len = min_seg_len;
        if (!beta.empty()) {
            m.beta = capa::io::parse_penalty(beta, scenario.n);
        }
        if (!beta_prime.empty()) {
            m.beta_prime = capa::io::parse_penalty(beta_prime, scenario.n);
        }
        const auto reports = capa::sim::run_replicates(scenario, m, replicates, tolerance, threads);

        std::ostringstream csv;
        csv.precision(12);
        csv << "replicate,seed,true_count,true_positive,false_positive,mean_abs_distance,true_points,points_found,"
               "points_spurious\n";
        auto row = [&](const std::string& label, const std::string& seed, const capa::sim::EvalReport& r) {
            csv << label << ',' << seed << ',' << r.true_count << ',' << r.true_positive_count << ','
                << r.false_positive_count << ',';
            if (const auto d = r.mean_abs_distance()) {
                csv << *d;
            }
            csv << ',' << r.true_points << ',' << r.points_found << ',' << r.points_spurious << '\n';
        };
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = 0; r < reports.size(); ++r) {
            seeds.push_back(scenario.seed + r);
            row(std::to_string(r), std::to_string(scenario.seed + r), reports[r]);
        }
        row("summary", "", capa::sim::pooled(reports));

        json config = {{"n", scenario.n},
                       {"rate", scenario.anomaly_rate},
                       {"mean_length", scenario.mean_length},
                       {"a", scenario.a},
                       {"b", scenario.b},
                       {"points", scenario.n_point_anomalies},
                       {"point_sd", scenario.point_anomaly_sd},
                       {"method", method},
                       {"replicates", replicates},
                       {"tolerance", tolerance},
                       {"min_seg_len", min_seg_len},
                       {"beta", m.beta ? json(*m.beta) : json(nullptr)},
                       {"beta_prime", m.beta_prime ? json(*m.beta_prime) : json(nullptr)}};
        const auto man = manifest("simulate", config, "", clock.seconds(), seeds);
        emit(output, csv.str(), &man);
    }
};

struct BenchCmd {
    std::vector<std::size_t> sizes{10000, 50000};
    bool stationary = false;
    std::size_t repeats = 3;
    std::uint64_t seed = 0;
    std::string output;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("bench", "time detection against series length");
        app->add_option("--sizes", sizes, "ascending series lengths")->delimiter(',')->capture_default_str();
        app->add_flag("--stationary", stationary, "pure N(0,1) data instead of the epidemic-change design");
        app->add_option("--repeats", repeats, "timed runs per size")->capture_default_str();
        app->add_option("--seed", seed, "seed of the first run")->capture_default_str();
        app->add_option("-o,--output", output, "CSV output path; stdout when absent");
        app->callback([this] { run(); });
    }

    void run() const {
        const Stopwatch clock;
        capa::sim::RuntimeOptions opt;
        opt.repeats = repeats;
        opt.seed = seed;
        const auto timings = capa::sim::runtime_experiment(sizes, stationary, opt);
        std::ostringstream csv;
        csv.precision(9);
        csv << "n,seconds\n";
        for (const auto& t : timings) {
            csv << t.n << ',' << t.seconds << '\n';
        }
        const double slope = capa::sim::loglog_slope(timings);
        if (timings.size() >= 2) {
            std::cerr << "log-log slope: " << slope << '\n';
        }
        json config = {{"sizes", sizes}, {"stationary", stationary}, {"repeats", repeats}};
        auto man = manifest("bench", config, "", clock.seconds(), {seed});
        man["loglog_slope"] = std::isfinite(slope) ? json(slope) : json(nullptr);
        emit(output, csv.str(), &man);
    }
};

struct TransitCmd {
    std::string input;
    capa::transit::PeriodGrid grid{1.0, 200.0, 0.01};
    double bin_width = 0.0208;
    unsigned threads = capa::default_thread_count();
    std::string output;
    CapaFlags flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("transit-scan", "strongest change in mean over a grid of folding periods");
        app->add_option("input", input, "CSV with columns time_days,flux")->required();
        app->add_option("--period-start", grid.start, "first period (days)")->capture_default_str();
        app->add_option("--period-end", grid.end, "last period (days)")->capture_default_str();
        app->add_option("--period-step", grid.step, "period increment (days)")->capture_default_str();
        app->add_option("--bin-width", bin_width, "bin width (days)")->capture_default_str();
        app->add_option("--threads", threads, "worker threads; defaults to CAPA_THREADS")->capture_default_str();
        app->add_option("-o,--output", output, "CSV output path; stdout when absent");
        flags.add(*app);
        app->callback([this] { run(); });
    }

    void run() const {
        const Stopwatch clock;
        const std::string bytes = read_file(input);
        std::istringstream in(bytes);
        const auto curve = capa::io::read_light_curve_csv(in);
        // penalties expressed in log n refer to the binned length at the first period
        const auto n = capa::transit::bin_count(grid.start, bin_width);
        const auto scan = capa::transit::scan_periods(curve, grid, bin_width, flags.build(n), threads);
        for (const auto& r : scan.records) {
            if (!r.max_delta_mu) {
                std::cerr << "period " << r.period << ": " << r.diagnostic << '\n';
            }
        }
        std::ostringstream csv;
        capa::io::write_period_scan_csv(csv, scan);
        json config = {{"period_start", grid.start},
                       {"period_end", grid.end},
                       {"period_step", grid.step},
                       {"bin_width", bin_width},
                       {"beta", flags.beta},
                       {"beta_prime", flags.beta_prime},
                       {"min_seg_len", flags.min_seg_len}};
        auto man = manifest("transit-scan", config, sha256_hex(bytes), clock.seconds());
        if (const auto* best = scan.strongest()) {
            man["strongest_period"] = best->period;
            man["strongest_delta_mu"] = *best->max_delta_mu;
        }
        emit(output, csv.str(), &man);
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collective and point anomaly detection"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    DetectCmd detect;
    SimulateCmd simulate;
    BenchCmd bench;
    TransitCmd transit;
    detect.add(app);
    simulate.add(app);
    bench.add(app);
    transit.add(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_input;
    } catch (const capa::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const capa::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }
    return 0;
}
