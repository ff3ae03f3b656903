// pplglm: selective inference for GLM coefficients after lasso selection.
//
//   pplglm fit      --data d.csv --response y --family logistic
//   pplglm infer    --data d.csv --response y --family poisson --lambda-mode fixed --lambda 20
//   pplglm compare  --data d.csv --response y --family beta
//   pplglm simulate --config scenarios/logistic_fixed.cfg --out summary.csv --curves curves.csv
//   pplglm generate --config scenarios/logistic_fixed.cfg --replicate 0 --out d.csv

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pplglm/io.hpp"
#include "pplglm/pplglm.hpp"

using namespace pplglm;

namespace {

struct Flags {
    std::string config;
    std::map<std::string, std::string> set;  // flag overrides, applied after the config file
    std::string out;
    std::string csv;
    std::string curves;
    long replicate = 0;
};

// Registers a string flag that lands in `flags.set[key]` when given.
void flag(CLI::App* app, Flags& flags, const std::string& name, const std::string& key,
          const std::string& help) {
    app->add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.set[key] = v; }, help);
}

void data_flags(CLI::App* app, Flags& f) {
    flag(app, f, "--data", "data", "CSV file with a header row");
    flag(app, f, "--response", "response", "name of the response column");
    flag(app, f, "--family", "family", "logistic | poisson | beta");
    flag(app, f, "--one-hot", "one_hot", "comma-separated categorical columns to one-hot encode");
}

void selection_flags(CLI::App* app, Flags& f) {
    flag(app, f, "--lambda", "lambda", "penalty for --lambda-mode fixed");
    flag(app, f, "--lambda-grid", "lambda_grid", "lo,hi,k log-spaced candidate penalties");
    flag(app, f, "--lambda-mode", "lambda_mode", "fixed | datadriven");
    flag(app, f, "--lambda-scale", "lambda_scale", "total (bound on |U'r|) | mean (per observation)");
    flag(app, f, "--alpha", "alpha", "1 - confidence level");
    flag(app, f, "--seed", "seed", "seed for the train/validation split");
    flag(app, f, "--method", "methods", "ppl | polyhedral | naive | all, or a comma list");
    flag(app, f, "--split-frac", "split_frac", "training share of the train/validation split");
}

io::Config merged(const Flags& f) {
    io::Config cfg = f.config.empty() ? io::Config{} : io::Config::load(f.config);
    for (const auto& [k, v] : f.set) cfg.set(k, v);
    return cfg;
}

Dataset load_data(const io::Config& cfg, const Family& family) {
    if (!cfg.has("data")) fail(ErrorKind::Config, "no data file given (--data)");
    if (!cfg.has("response")) fail(ErrorKind::Config, "no response column given (--response)");
    return io::read_dataset(cfg.get("data", ""), cfg.get("response", ""), family,
                            io::Config::split(cfg.get("one_hot", "")));
}

InferenceOptions inference_options(const io::Config& cfg, const std::string& default_methods) {
    InferenceOptions o;
    o.mode = parse_lambda_mode(cfg.get("lambda_mode", "datadriven"));
    o.scale = parse_lambda_scale(cfg.get("lambda_scale", "total"));
    o.alpha = cfg.number("alpha", 0.05);
    if (!(o.alpha > 0 && o.alpha <= 0.5)) fail(ErrorKind::Config, "alpha must lie in (0, 1/2]");
    o.split_frac = cfg.number("split_frac", 0.7);
    long seed = cfg.integer("seed", 1);
    if (seed < 0) fail(ErrorKind::Config, "seed must be nonnegative");
    o.seed = static_cast<std::uint64_t>(seed);
    o.methods = io::parse_methods(cfg.get("methods", default_methods));
    if (o.mode == LambdaMode::Fixed) {
        if (!cfg.has("lambda")) fail(ErrorKind::Config, "--lambda-mode fixed needs --lambda");
        o.lambda = cfg.number("lambda", 0.0);
        if (!(o.lambda > 0)) fail(ErrorKind::Config, "lambda must be positive");
    } else if (cfg.has("lambda_grid")) {
        auto g = cfg.numbers("lambda_grid");
        if (g.size() != 3 || g[2] != std::floor(g[2])) fail(ErrorKind::Config, "lambda grid must be lo,hi,k");
        o.grid = lambda_grid(g[0], g[1], static_cast<int>(g[2]));
    }
    return o;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Config, "cannot write '" + path + "'");
    out << text;
}

int cmd_fit(const Flags& f) {
    io::Config cfg = merged(f);
    Family family = parse_family(cfg.get("family", "logistic"));
    Dataset data = load_data(cfg, family);
    GlmFit fit = fit_mle(data, family);
    io::Json j;
    j["family"] = std::string(to_string(family.kind));
    j["n"] = data.n();
    j["p"] = data.p();
    j["intercept"] = fit.beta0;
    io::Json coefs = io::Json::array();
    for (Index k = 0; k < data.p(); ++k)
        coefs.push_back({{"index", k + 1}, {"name", data.column_name(k)}, {"estimate", fit.beta(k)}});
    j["coefficients"] = coefs;
    j["phi"] = fit.phi;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["ridge_used"] = fit.ridge_used;
    write_text(f.out, j.dump(2) + "\n");
    return 0;
}

int cmd_infer(const Flags& f, const std::string& default_methods) {
    io::Config cfg = merged(f);
    Family family = parse_family(cfg.get("family", "logistic"));
    InferenceOptions opts = inference_options(cfg, default_methods);
    Dataset data = load_data(cfg, family);
    InferenceReport rep = run_inference(data, family, opts);

    rep.settings = cfg.values();
    rep.settings["family"] = std::string(to_string(family.kind));
    rep.settings["lambda_mode"] = std::string(to_string(opts.mode));
    rep.settings["lambda_scale"] = std::string(to_string(opts.scale));
    rep.settings["alpha"] = io::fmt(opts.alpha);
    rep.settings["methods"] = io::join_methods(opts.methods);
    rep.settings["window_sigmas"] = io::fmt(opts.window_sigmas);
    if (opts.mode == LambdaMode::Fixed) {
        rep.settings["lambda"] = io::fmt(opts.lambda);
    } else {
        rep.settings["seed"] = std::to_string(opts.seed);
        rep.settings["split_frac"] = io::fmt(opts.split_frac);
        rep.settings["lambda_grid"] = io::fmt(rep.grid.front()) + "," + io::fmt(rep.grid.back()) + "," +
                                      std::to_string(rep.grid.size());
    }
    write_text(f.out, io::report_json(rep).dump(2) + "\n");
    if (!f.csv.empty()) {
        std::ostringstream os;
        io::write_report_csv(os, rep);
        write_text(f.csv, os.str());
    }
    return 0;
}

int cmd_simulate(const Flags& f) {
    io::Config cfg = merged(f);
    Scenario s = io::scenario_from(cfg);
    if (s.family.is_beta())
        std::cerr << "note: beta responses generated with precision phi = " << io::fmt(s.phi) << "\n";
    SummaryTable table = run_replications(s);
    std::ostringstream os;
    for (const auto& [k, v] : io::scenario_settings_map(s)) os << "# " << k << " = " << v << "\n";
    io::write_summary_csv(os, table);
    write_text(f.out, os.str());
    if (!f.curves.empty()) {
        std::ostringstream cs;
        io::write_curves_csv(cs, table);
        write_text(f.curves, cs.str());
    }
    return 0;
}

int cmd_generate(const Flags& f) {
    io::Config cfg = merged(f);
    Scenario s = io::scenario_from(cfg);
    if (f.replicate < 0) fail(ErrorKind::Config, "replicate must be nonnegative");
    std::ostringstream os;
    io::write_dataset(os, generate_dataset(s, static_cast<std::uint64_t>(f.replicate)));
    write_text(f.out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective inference for GLM coefficients after lasso selection"};
    app.require_subcommand(1);
    Flags f;

    auto* fit = app.add_subcommand("fit", "maximum likelihood fit of the full model");
    fit->add_option("--config", f.config, "key = value settings file");
    data_flags(fit, f);
    fit->add_option("--out", f.out, "JSON output path (default stdout)");

    auto* infer = app.add_subcommand("infer", "select a model and report selective inference");
    auto* compare = app.add_subcommand("compare", "as infer, with all three methods by default");
    for (auto* sub : {infer, compare}) {
        sub->add_option("--config", f.config, "key = value settings file");
        data_flags(sub, f);
        selection_flags(sub, f);
        sub->add_option("--out", f.out, "JSON report path (default stdout)");
        sub->add_option("--csv", f.csv, "CSV table path");
    }

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study from a scenario file");
    auto* generate = app.add_subcommand("generate", "write one simulated dataset as CSV");
    for (auto* sub : {simulate, generate}) {
        sub->add_option("--config", f.config, "scenario file");
        flag(sub, f, "--family", "family", "logistic | poisson | beta");
        flag(sub, f, "--n", "n", "observations");
        flag(sub, f, "--p", "p", "covariates");
        flag(sub, f, "--seed", "seed", "random seed");
        flag(sub, f, "--replicates", "replicates", "Monte Carlo replicates");
        flag(sub, f, "--phi", "phi", "beta precision used to generate responses");
        sub->add_option("--out", f.out, "output path (default stdout)");
    }
    flag(simulate, f, "--lambda-grid", "lambda_grid", "lo,hi,k");
    flag(simulate, f, "--lambdas", "lambdas", "explicit comma list of fixed penalties");
    flag(simulate, f, "--lambda-mode", "lambda_mode", "fixed | datadriven");
    flag(simulate, f, "--lambda-scale", "lambda_scale", "total | mean");
    flag(simulate, f, "--alpha", "alpha", "1 - confidence level");
    flag(simulate, f, "--method", "methods", "ppl | polyhedral | naive | all, or a comma list");
    flag(simulate, f, "--split-frac", "split_frac", "training share of the split");
    simulate->add_option("--curves", f.curves, "long-format CSV for plotting");
    generate->add_option("--replicate", f.replicate, "replicate index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorKind::Config);
    }

    try {
        if (*fit) return cmd_fit(f);
        if (*infer) return cmd_infer(f, "ppl");
        if (*compare) return cmd_infer(f, "all");
        if (*simulate) return cmd_simulate(f);
        if (*generate) return cmd_generate(f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::Numeric);
    }
    return 0;
}
