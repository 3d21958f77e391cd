// Command-line front end: runs each verification pipeline on a built-in
// fixture or an input file and writes reports.
//
// Exit codes: 0 all checks pass, 1 checks ran and failed, 2 input or
// configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "mimic/controlled_sde.hpp"
#include "mimic/entropy_min.hpp"
#include "mimic/errors.hpp"
#include "mimic/fixtures.hpp"
#include "mimic/occupation.hpp"
#include "mimic/path_measure.hpp"
#include "mimic/report.hpp"
#include "mimic/sde_config.hpp"
#include "mimic/text_io.hpp"

namespace {

using namespace mimic;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInputError = 2;

/// Configuration or input problem detected by the front end itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string fixture;
    std::string input;
    std::string out;
    std::optional<double> tol;
    double beta = 0.5;
    std::optional<int> s;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    unsigned threads = 1;
    bool negative_control = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void require_one_source(const Options& o) {
    if (o.fixture.empty() == o.input.empty()) throw UsageError("give exactly one of a fixture name or --input");
}

/// Writes files into the output directory (created on demand); a no-op
/// when no directory was requested.
class OutputDir {
public:
    explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    template <class Write>
    void file(const std::string& name, Write&& write) const {
        if (dir_.empty()) return;
        const auto path = std::filesystem::path(dir_) / name;
        std::ofstream out(path);
        if (!out) throw UsageError("cannot write '" + path.string() + "'");
        write(out);
    }

    void report(const Report& report) const {
        report.write(std::cout);
        file("report.txt", [&](std::ostream& out) { report.write(out); });
    }

private:
    std::string dir_;
};

PathLaw load_path_law(const Options& o) {
    require_one_source(o);
    if (!o.input.empty()) return read_path_law(read_file(o.input));
    if (o.fixture == "memory-chain") return fixtures::memory_chain();
    if (o.fixture == "already-markov") return fixtures::already_markov();
    if (o.fixture == "product-uniform") return fixtures::product_uniform();
    throw UsageError("unknown path-law fixture '" + o.fixture + "'");
}

double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Uniform law over every trajectory of the same space.
PathLaw uniform_reference(const PathLaw& law) {
    return PathLaw::normalized(law.states(), law.actions(), law.horizon(), std::vector<double>(law.size(), 1.0));
}

void write_marginal_table(std::ostream& out, const PathLaw& a, const PathLaw& b, const char* name_a,
                          const char* name_b) {
    out << "time,state," << name_a << ',' << name_b << '\n';
    for (int t = 0; t <= a.horizon(); ++t) {
        const Eigen::VectorXd ma = marginal(a, t), mb = marginal(b, t);
        for (Eigen::Index x = 0; x < ma.size(); ++x)
            out << t << ',' << a.states()[static_cast<std::size_t>(x)] << ',' << format_double(ma(x)) << ','
                << format_double(mb(x)) << '\n';
    }
}

int run_mimic(const Options& o) {
    const PathLaw law = load_path_law(o);
    const double tol = o.tol.value_or(1e-12);
    const MarkovChainModel chain = markov_mimic(law);
    const PathLaw mimic_law = law_of(chain, law.horizon());

    double marginal_gap = 0.0, pair_gap = 0.0;
    for (int t = 0; t <= law.horizon(); ++t) {
        marginal_gap = std::max(marginal_gap, max_abs(marginal(law, t), marginal(mimic_law, t)));
        if (t < law.horizon()) pair_gap = std::max(pair_gap, max_abs(pair_marginal(law, t), pair_marginal(mimic_law, t)));
    }
    const bool pass = marginal_gap <= tol && pair_gap <= tol;

    Report report("mimic");
    report.add("source", o.input.empty() ? o.fixture : o.input);
    report.add("horizon", law.horizon());
    report.add("states", law.states().size());
    report.add("tolerance", tol);
    report.add("max_marginal_gap", marginal_gap);
    report.add("max_pair_marginal_gap", pair_gap);
    report.add("input_markov", is_markov(law, 1e-9));
    if (law.horizon() >= 2 && is_markov(law, 1e-9)) report.note("input is Markov; the mimic reproduces its law");
    report.add("total_variation_to_mimic", total_variation(law, mimic_law));
    report.add("pass", pass);

    const OutputDir out(o.out);
    out.file("mimic_chain.txt", [&](std::ostream& f) { write_markov_chain(f, chain); });
    out.file("marginals.csv", [&](std::ostream& f) { write_marginal_table(f, law, mimic_law, "input", "mimic"); });
    out.report(report);
    return pass ? kPass : kFail;
}

int run_markovianize(const Options& o) {
    const PathLaw law = load_path_law(o);
    const PathLaw reference = uniform_reference(law);
    const double tol = o.tol.value_or(1e-12);
    if (law.horizon() < 2) throw UsageError("markovianization needs horizon >= 2");

    std::vector<int> times;
    if (o.s) {
        if (*o.s <= 0 || *o.s >= law.horizon()) throw UsageError("--s must lie strictly between 0 and the horizon");
        times.push_back(*o.s);
    } else {
        for (int s = 1; s < law.horizon(); ++s) times.push_back(s);
    }

    Report report("markovianize");
    report.add("source", o.input.empty() ? o.fixture : o.input);
    report.add("reference", "uniform");
    report.add("tolerance", tol);
    const double before = relative_entropy(law, reference);
    report.add("entropy_before", before);
    bool pass = true;
    const OutputDir out(o.out);
    for (int s : times) {
        const std::string key = "s" + std::to_string(s) + ".";
        const MarkovPointTest test = is_markov_point(law, s, 1e-9);
        const PathLaw glued = markovianize(law, s);
        double gap = 0.0;
        for (int t = 0; t <= law.horizon(); ++t) gap = std::max(gap, max_abs(marginal(law, t), marginal(glued, t)));
        const double after = relative_entropy(glued, reference);
        const bool markov_after = is_markov_point(glued, s, 1e-9).markov;
        const bool descent = test.markov ? std::abs(after - before) <= tol : after < before - tol;
        const MarkovianizedDensityReport density = verify_markovianized_density(law, reference, s);
        const bool ok = gap <= tol && markov_after && descent;
        pass = pass && ok;

        report.add(key + "markov_point_before", test.markov);
        report.add(key + "markov_gap_before", test.gap);
        report.add(key + "entropy_after", after);
        report.add(key + "max_marginal_gap", gap);
        report.add(key + "markov_point_after", markov_after);
        report.add(key + "density_suffix_average_gap", density.discrepancy);
        report.add(key + "density_corrected_gap", density.corrected_discrepancy);
        report.add(key + "pass", ok);
        out.file("markovianized_s" + std::to_string(s) + ".txt", [&](std::ostream& f) { write_path_law(f, glued); });
    }
    report.add("pass", pass);
    out.report(report);
    return pass ? kPass : kFail;
}

int run_entropy_min(const Options& o) {
    require_one_source(o);
    std::optional<MarginalConstraintSet> set;
    std::optional<PathLaw> source_law;
    if (!o.input.empty()) {
        set = read_constraint_set(read_file(o.input));
    } else if (o.fixture == "memory-chain") {
        set = fixtures::memory_chain_constraints();
        source_law = fixtures::memory_chain();
    } else if (o.fixture == "terminal-skew") {
        set = fixtures::terminal_skew_constraints();
    } else {
        throw UsageError("unknown constraint-set fixture '" + o.fixture + "'");
    }

    EntropyMinOptions options;
    options.tol = o.tol.value_or(options.tol);
    const EntropyMinResult result = minimize_entropy(*set, options);
    const auto& d = result.diagnostics;
    const double markov_tol = 10.0 * options.tol;
    bool pass = d.residual <= options.tol && d.markov;

    Report report("entropy-min");
    report.add("source", o.input.empty() ? o.fixture : o.input);
    report.add("tolerance", options.tol);
    report.add("iterations", d.iterations);
    report.add("residual", d.residual);
    report.add("entropy", d.entropy);
    if (source_law) report.add("source_entropy", relative_entropy(*source_law, set->reference()));
    for (std::size_t i = 0; i < d.markov_gaps.size(); ++i)
        report.add("markov_gap.s" + std::to_string(i + 1), d.markov_gaps[i]);
    report.add("markov_tolerance", markov_tol);
    report.add("markov", d.markov);
    if (set->reference().size() <= kOracleMaxPaths) {
        const PathLaw oracle = brute_force_minimizer(*set);
        const double gap = std::abs(relative_entropy(oracle, set->reference()) - d.entropy);
        report.add("oracle_entropy_gap", gap);
        pass = pass && gap <= 1e-6;
    } else {
        report.note("path space too large for the oracle cross-check");
    }
    report.add("pass", pass);

    const OutputDir out(o.out);
    out.file("minimizer.txt", [&](std::ostream& f) { write_path_law(f, result.law); });
    out.file("entropy_history.csv", [&](std::ostream& f) {
        f << "cycle,entropy,residual\n";
        for (std::size_t k = 0; k < d.entropy_history.size(); ++k)
            f << k << ',' << format_double(d.entropy_history[k]) << ',' << format_double(d.residual_history[k]) << '\n';
    });
    out.report(report);
    return pass ? kPass : kFail;
}

int run_occupation(const Options& o) {
    require_one_source(o);
    if (!(o.beta > 0.0 && o.beta < 1.0)) throw UsageError("--beta must lie in (0, 1)");
    std::optional<ControlledChainInput> input;
    if (!o.input.empty()) {
        input = read_controlled_chain(read_file(o.input));
    } else if (o.fixture == "fixture-hd") {
        input = ControlledChainInput{fixtures::history_dependent_chain(), fixtures::indicator_cost()};
    } else {
        throw UsageError("unknown controlled-chain fixture '" + o.fixture + "'");
    }
    const ControlledChain& chain = input->chain;
    const double tol = o.tol.value_or(1e-10);

    const OccupationMeasure occ = occupation_measure(chain, o.beta);
    const ControlledChain mimic_chain =
        stationary_mimic(occ, chain.dynamics(), chain.initial(), chain.states(), chain.actions());
    const OccupationMeasure mimic_occ = occupation_measure(mimic_chain, o.beta);
    const double tv = total_variation(occ.joint, mimic_occ.joint);
    const Eigen::MatrixXd cost = input->cost.value_or(
        Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(chain.states().size()),
                              static_cast<Eigen::Index>(chain.actions().size())));
    const ResolventReport resolvent = resolvent_check(chain, mimic_chain, o.beta, cost);
    const bool pass = tv <= tol && resolvent.discrepancy <= tol;

    const int horizon = 10;
    const Eigen::MatrixXd laws = state_marginals(chain, horizon);
    const Eigen::MatrixXd mimic_laws = state_marginals(mimic_chain, horizon);

    Report report("occupation");
    report.add("source", o.input.empty() ? o.fixture : o.input);
    report.add("beta", o.beta);
    report.add("tolerance", tol);
    report.add("enumerated_steps", occ.enumerated_steps);
    report.add("total_variation", tv);
    report.add("resolvent.original_side", resolvent.original_side);
    report.add("resolvent.resolvent_side", resolvent.resolvent_side);
    report.add("resolvent.discrepancy", resolvent.discrepancy);
    report.add("cost", input->cost ? "given" : "constant one");
    for (std::size_t x = 0; x < occ.null_states.size(); ++x)
        if (occ.null_states[x]) report.note("state " + chain.states()[x] + " has zero occupation; uniform policy row");
    report.add("per_time_marginal_gap_first_10_steps", max_abs(laws, mimic_laws));
    report.add("pass", pass);

    const OutputDir out(o.out);
    out.file("occupation.csv", [&](std::ostream& f) {
        f << "state,action,original,mimic,policy\n";
        for (std::size_t x = 0; x < chain.states().size(); ++x)
            for (std::size_t u = 0; u < chain.actions().size(); ++u) {
                const auto xi = static_cast<Eigen::Index>(x), ui = static_cast<Eigen::Index>(u);
                f << chain.states()[x] << ',' << chain.actions()[u] << ',' << format_double(occ.joint(xi, ui)) << ','
                  << format_double(mimic_occ.joint(xi, ui)) << ',' << format_double(occ.policy(xi, ui)) << '\n';
            }
    });
    out.file("mimic_chain.txt", [&](std::ostream& f) { write_controlled_chain(f, mimic_chain, input->cost); });
    out.report(report);
    return pass ? kPass : kFail;
}

void write_policy_csv(std::ostream& out, const ProjectedPolicy& policy) {
    out << "step,time,lower,upper,group,count";
    for (std::size_t u = 0; u < policy.num_actions; ++u) out << ",p" << u;
    out << '\n';
    for (std::size_t n = 0; n < policy.slices.size(); ++n) {
        const PolicySlice& s = policy.slices[n];
        for (std::size_t g = 0; g < s.probabilities.size(); ++g) {
            out << n << ',' << format_double(static_cast<double>(n) * policy.dt) << ',' << format_double(s.lower) << ','
                << format_double(s.upper) << ',' << g << ',' << s.counts[g];
            for (double p : s.probabilities[g]) out << ',' << format_double(p);
            out << '\n';
        }
    }
}

void add_comparison(Report& report, const std::string& prefix, const MarginalComparison& c) {
    report.add(prefix + "slice_level", c.slice_level);
    for (const auto& s : c.slices) {
        const std::string key = prefix + "t" + format_double(s.time) + (s.coord ? ".c" + std::to_string(s.coord) : "");
        report.add(key + ".statistic", s.statistic);
        report.add(key + ".p_value", s.p_value);
        report.add(key + ".critical", s.critical);
    }
    report.add(prefix + "max_statistic", c.max_statistic());
    report.add(prefix + "pass", c.passed);
}

int run_sde_mimic(const Options& o) {
    require_one_source(o);
    SdeExperiment e = o.input.empty() ? sde_fixture(o.fixture) : parse_sde_config(read_file(o.input));
    if (o.seed) e.seed = o.seed;
    if (!e.seed) throw UsageError("a seed is required (--seed or 'seed' in the config)");
    if (o.n) e.paths = *o.n;
    if (e.paths < 1) throw UsageError("--n must be at least 1");

    SimulationOptions sim;
    sim.paths = e.paths;
    sim.seed = *e.seed;
    sim.threads = o.threads;
    sim.slices = e.slices;
    const SimulationResult original = simulate(e.model, sim);
    const ProjectedPolicy policy = project_control(*original.trajectories, e.projection);

    SimulationOptions mimic_sim = sim;
    mimic_sim.seed = substream_seed(*e.seed, std::numeric_limits<std::uint64_t>::max());
    mimic_sim.record_paths = false;
    const SimulationResult mimic_run = simulate_mimic(e.model, policy, mimic_sim);
    const MarginalComparison comparison = compare_marginals(original.marginals, mimic_run.marginals, e.level);

    Report report("sde-mimic");
    report.add("model", e.model_name);
    report.add("paths", e.paths);
    report.add("seed", *e.seed);
    report.add("mimic_seed", mimic_sim.seed);
    report.add("steps", model_steps(e.model));
    report.add("dt", model_dt(e.model));
    report.add("bins", e.projection.bins);
    report.add("min_count", e.projection.min_count);
    report.add("bins_merged", policy.any_merged());
    report.add("mimic_escapes", mimic_run.escapes);
    report.add("level", e.level);
    add_comparison(report, "mimic.", comparison);
    if (o.negative_control) {
        const ProjectedPolicy uniform = uniform_policy(model_steps(e.model), model_dt(e.model), policy.num_actions);
        const SimulationResult wrong = simulate_mimic(e.model, uniform, mimic_sim);
        const MarginalComparison c = compare_marginals(original.marginals, wrong.marginals, e.level);
        add_comparison(report, "uniform.", c);
        report.add("uniform.rejected", !c.passed);
    }
    report.add("pass", comparison.passed);

    const OutputDir out(o.out);
    out.file("marginals_original.csv", [&](std::ostream& f) { write_marginals_csv(f, original.marginals); });
    out.file("marginals_mimic.csv", [&](std::ostream& f) { write_marginals_csv(f, mimic_run.marginals); });
    out.file("policy.csv", [&](std::ostream& f) { write_policy_csv(f, policy); });
    out.report(report);
    return comparison.passed ? kPass : kFail;
}

void add_source_options(CLI::App* cmd, Options& o) {
    cmd->add_option("fixture,--fixture", o.fixture, "Built-in fixture name");
    cmd->add_option("--input", o.input, "Input file")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (created if absent)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov mimics of path-dependent processes"};
    app.require_subcommand(1);
    Options o;

    auto* mimic_cmd = app.add_subcommand("mimic", "Markov chain with the same one-step marginals");
    add_source_options(mimic_cmd, o);
    mimic_cmd->add_option("--tol", o.tol, "Marginal tolerance (default 1e-12)");

    auto* markov_cmd = app.add_subcommand("markovianize", "Glue past and future at a time s");
    add_source_options(markov_cmd, o);
    markov_cmd->add_option("--s", o.s, "Gluing time (default: every interior time)");
    markov_cmd->add_option("--tol", o.tol, "Tolerance (default 1e-12)");

    auto* entropy_cmd = app.add_subcommand("entropy-min", "Minimum relative entropy under marginal constraints");
    add_source_options(entropy_cmd, o);
    entropy_cmd->add_option("--tol", o.tol, "Constraint tolerance (default 1e-9)");

    auto* occ_cmd = app.add_subcommand("occupation", "Discounted occupation measure and its stationary mimic");
    add_source_options(occ_cmd, o);
    occ_cmd->add_option("--beta", o.beta, "Discount factor in (0, 1)");
    occ_cmd->add_option("--tol", o.tol, "Tolerance (default 1e-10)");

    auto* sde_cmd = app.add_subcommand("sde-mimic", "Monte Carlo mimic of a controlled SDE");
    add_source_options(sde_cmd, o);
    sde_cmd->add_option("--seed", o.seed, "Random seed (required unless set in the config)");
    sde_cmd->add_option("--n", o.n, "Number of paths");
    sde_cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
    sde_cmd->add_flag("--negative-control", o.negative_control, "Also test a uniform policy, which should be rejected");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kPass : kInputError;
    }

    try {
        if (*mimic_cmd) return run_mimic(o);
        if (*markov_cmd) return run_markovianize(o);
        if (*entropy_cmd) return run_entropy_min(o);
        if (*occ_cmd) return run_occupation(o);
        return run_sde_mimic(o);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (residual " << e.residual() << ")\n";
        return kFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
}
