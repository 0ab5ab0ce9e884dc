// causalboot: generate confounded benchmark data, validate adjustment
// criteria, draw causal bootstrap samples, estimate interventional effects,
// and run the full train/test experiment grids.
//
// Exit codes: 0 success, 2 usage/config error, 3 criteria violation,
// 4 data/estimation failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causalboot/csv.hpp"
#include "causalboot/effects.hpp"
#include "causalboot/experiment.hpp"
#include "causalboot/graph.hpp"
#include "causalboot/resample.hpp"
#include "causalboot/synthdata.hpp"
#include "causalboot/weights.hpp"

namespace fs = std::filesystem;
using namespace causalboot;

namespace {

kernel_map parse_bandwidths(const std::vector<std::string>& specs) {
    kernel_map out;
    for (const auto& s : specs) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error("--bandwidth expects var=h, got '" + s + "'");
        std::string var = trim(s.substr(0, eq));
        double h = 0.0;
        try {
            h = std::stod(s.substr(eq + 1));
        } catch (const std::exception&) {
            throw config_error("--bandwidth value in '" + s + "' is not numeric");
        }
        if (!(h > 0.0)) throw config_error("--bandwidth must be positive in '" + s + "'");
        out[var] = kernel_spec::gaussian(h);
    }
    return out;
}

// Bandwidth overrides are single values; expand to the variable's dimension.
kernel_map expand_bandwidths(const kernel_map& raw, const dataset& data) {
    kernel_map out;
    for (const auto& [var, spec] : raw) {
        if (!data.has(var)) throw config_error("--bandwidth names unknown variable '" + var + "'");
        const auto& vi = data.info(var);
        if (vi.kind != var_kind::continuous)
            throw config_error("--bandwidth only applies to continuous variables ('" + var + "')");
        out[var] = kernel_spec::gaussian(
            std::vector<double>(static_cast<size_t>(vi.dim), spec.bandwidths.front()));
    }
    return out;
}

cell parse_intervention(const dataset& data, const std::string& target, const std::string& text) {
    const auto& vi = data.info(target);
    if (vi.kind == var_kind::discrete) {
        try {
            return cell(std::stoi(text));
        } catch (const std::exception&) {
            throw config_error("intervention value '" + text + "' is not an integer category");
        }
    }
    auto parts = split_list(text);
    std::vector<double> vals;
    for (const auto& p : parts) {
        try {
            vals.push_back(std::stod(p));
        } catch (const std::exception&) {
            throw config_error("intervention value '" + text + "' is not numeric");
        }
    }
    return cell(std::move(vals));
}

struct generate_options {
    std::string experiment;
    std::string out_dir;
    size_t n = 0;
    std::uint64_t seed = 0;
    std::string mnist_images, mnist_labels, parkinsons_csv;
    std::string image_format = "csv";
};

int cmd_generate(const generate_options& opt) {
    fs::create_directories(opt.out_dir);
    std::optional<causal_graph> graph;
    std::optional<mnist_data> pool;
    std::optional<dataset> features;
    size_t n = opt.n;

    if (opt.experiment == "gauss-backdoor") {
        graph = gauss_backdoor_graph();
        if (n == 0) n = 2000;
    } else if (opt.experiment == "gauss-frontdoor") {
        graph = gauss_frontdoor_graph();
        if (n == 0) n = 2000;
    } else if (opt.experiment == "mnist-backdoor" || opt.experiment == "mnist-frontdoor") {
        graph = opt.experiment == "mnist-backdoor" ? mnist_backdoor_graph()
                                                   : mnist_frontdoor_graph();
        if (opt.mnist_images.empty() || opt.mnist_labels.empty())
            throw config_error("image experiments need --mnist-images and --mnist-labels");
        pool = load_mnist_idx(opt.mnist_images, opt.mnist_labels);
        if (n == 0) n = 560;
    } else if (opt.experiment == "parkinsons-backdoor") {
        graph = parkinsons_graph();
        if (opt.parkinsons_csv.empty())
            throw config_error("parkinsons-backdoor needs --parkinsons <features.csv>");
        features = read_dataset_csv(opt.parkinsons_csv, &*graph);
        if (n == 0) n = 1000;
    } else {
        throw config_error("unknown experiment '" + opt.experiment + "'");
    }

    std::array<mnist_data, 3> parts;
    if (pool) parts = partition_pool(*pool, derive_seed(opt.seed, 0x706cULL));

    for (int e = 1; e <= 3; ++e) {
        env_spec spec{e, n, derive_seed(opt.seed, static_cast<std::uint64_t>(e))};
        dataset data;
        if (opt.experiment == "gauss-backdoor") data = gen_gauss_backdoor(spec);
        else if (opt.experiment == "gauss-frontdoor") data = gen_gauss_frontdoor(spec);
        else if (opt.experiment == "mnist-backdoor")
            data = gen_mnist_backdoor(parts[static_cast<size_t>(e - 1)], spec);
        else if (opt.experiment == "mnist-frontdoor")
            data = gen_mnist_frontdoor(parts[static_cast<size_t>(e - 1)], spec);
        else data = confound_resample_parkinsons(*features, spec);

        std::string csv_path = (fs::path(opt.out_dir) / ("e" + std::to_string(e) + ".csv")).string();
        std::string blob_var;
        if (opt.image_format == "blob" && data.has("x") && data.info("x").dim > 1) blob_var = "x";
        write_dataset_csv(data, csv_path, blob_var);
        if (blob_var.empty()) {
            write_sidecar(sidecar_path_for(csv_path),
                          {{"experiment", opt.experiment},
                           {"environment", std::to_string(e)},
                           {"n", std::to_string(n)},
                           {"seed", std::to_string(opt.seed)},
                           {"generator", k_generator_id}});
        }
    }
    std::string graph_path = (fs::path(opt.out_dir) / "graph.cbg").string();
    std::ofstream g(graph_path, std::ios::trunc);
    g << graph_to_text(*graph);
    std::cout << "wrote e1.csv e2.csv e3.csv graph.cbg under " << opt.out_dir << "\n";
    return 0;
}

struct bootstrap_options {
    std::string data_path, graph_path, plan_path, out_path;
    std::string method = "backdoor";
    std::string mode = "dirac";
    std::string schedule = "grouped";
    std::string intervene_list;
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
    bool force = false;
    int split_folds = 0;
    std::vector<std::string> bandwidths;
};

int cmd_bootstrap(const bootstrap_options& opt) {
    adjust_method method = parse_method(opt.method);
    std::optional<causal_graph> graph;
    if (!opt.graph_path.empty()) graph = load_graph(opt.graph_path);
    std::optional<weight_plan> plan;
    if (!opt.plan_path.empty()) plan = load_plan(opt.plan_path);
    if (method != adjust_method::plan && !graph)
        throw config_error("method '" + opt.method + "' needs --graph");
    if (method == adjust_method::plan && !plan)
        throw config_error("method 'plan' needs --plan <file>");

    dataset data = read_dataset_csv(opt.data_path, graph ? &*graph : nullptr);
    kernel_map overrides = expand_bandwidths(parse_bandwidths(opt.bandwidths), data);

    const std::string target = method == adjust_method::plan && plan
                                   ? plan->target
                                   : graph->roles().target;

    bootstrap_spec spec;
    spec.seed = opt.seed;
    spec.replicate_index = opt.replicate;
    if (opt.mode == "dirac") spec.mode = bootstrap_spec::mode_t::dirac;
    else if (opt.mode == "smoothed") spec.mode = bootstrap_spec::mode_t::smoothed;
    else throw config_error("unknown mode '" + opt.mode + "' (dirac|smoothed)");

    if (opt.schedule == "grouped") {
        spec.schedule = bootstrap_spec::schedule_t::per_class_floor;
    } else if (opt.schedule == "mirror") {
        spec.schedule = bootstrap_spec::schedule_t::mirror_observed;
    } else if (opt.schedule == "list") {
        spec.schedule = bootstrap_spec::schedule_t::explicit_list;
        for (const auto& v : split_list(opt.intervene_list))
            spec.explicit_values.push_back(parse_intervention(data, target, v));
        if (spec.explicit_values.empty())
            throw config_error("--schedule list needs --intervene v1,v2,...");
    } else {
        throw config_error("unknown schedule '" + opt.schedule + "' (grouped|mirror|list)");
    }

    std::vector<std::string> effect = method == adjust_method::plan && plan
                                          ? plan->effect
                                          : graph->roles().effect;
    if (spec.mode == bootstrap_spec::mode_t::smoothed) {
        for (const auto& c : effect)
            if (data.info(c).kind == var_kind::discrete)
                throw config_error("smoothed mode is undefined for discrete effect column '" + c +
                                   "'");
        spec.effect_kernels = resolve_kernels(data, effect, overrides);
    }

    auto sample = deconfound(data, graph ? &*graph : nullptr, method, plan, spec, opt.force,
                             overrides);

    // append provenance (and folds) to the emitted table
    dataset out_table = sample.rows;
    std::vector<int> src(sample.provenance.size());
    for (size_t i = 0; i < src.size(); ++i) src[i] = static_cast<int>(sample.provenance[i]);
    out_table.add_discrete("__src_row", std::move(src), static_cast<int>(data.n_rows()) + 1);
    if (opt.split_folds > 0) {
        auto folds = split_sample_folds(sample, opt.split_folds, derive_seed(opt.seed, 0x73706cULL));
        for (int& f : folds) ++f;  // folds as 1..k in the CSV
        out_table.add_discrete("__fold", std::move(folds), opt.split_folds + 1);
    }

    // keep the blob representation when the input used one for an effect column
    std::string blob_var;
    auto in_meta = read_sidecar(sidecar_path_for(opt.data_path));
    auto in_blob = in_meta.find("image_var");
    if (in_blob != in_meta.end())
        for (const auto& c : effect)
            if (c == in_blob->second) blob_var = c;
    write_dataset_csv(out_table, opt.out_path, blob_var);

    std::vector<std::pair<std::string, std::string>> meta{
        {"source", opt.data_path},
        {"method", opt.method},
        {"mode", spec.mode_name()},
        {"schedule", spec.schedule_name()},
        {"seed", std::to_string(spec.seed)},
        {"replicate", std::to_string(spec.replicate_index)},
        {"generator", k_generator_id},
        {"floor_hits", std::to_string(sample.floor_hits)}};
    if (!blob_var.empty()) {
        meta.emplace_back("image_blob", sidecar_path_for(opt.out_path) + ".blob");
        meta.emplace_back("image_var", blob_var);
        meta.emplace_back("image_dim", std::to_string(data.info(blob_var).dim));
    }
    write_sidecar(sidecar_path_for(opt.out_path), meta);
    std::cout << "wrote " << out_table.n_rows() << " deconfounded rows to " << opt.out_path
              << " (floor hits: " << sample.floor_hits << ")\n";
    return 0;
}

struct validate_options {
    std::string graph_path;
    std::string method = "backdoor";
};

int cmd_validate(const validate_options& opt) {
    causal_graph graph = load_graph(opt.graph_path);
    validate_method(graph, parse_method(opt.method));
    std::cout << "criteria hold for method '" << opt.method << "'\n";
    return 0;
}

struct ate_options {
    std::string data_path, graph_path, out_path;
    std::string method = "backdoor";
    std::string y0, y1;
    std::vector<std::string> bandwidths;
    double quantile = 0.0;
    bool force = false;
};

int cmd_ate(const ate_options& opt) {
    adjust_method method = parse_method(opt.method);
    causal_graph graph = load_graph(opt.graph_path);
    if (method != adjust_method::backdoor && method != adjust_method::frontdoor)
        throw config_error("ate supports methods backdoor|frontdoor");
    dataset data = read_dataset_csv(opt.data_path, &graph);
    kernel_map overrides = expand_bandwidths(parse_bandwidths(opt.bandwidths), data);
    if (!opt.force) validate_method(graph, method);

    const auto& roles = graph.roles();
    cell y0 = parse_intervention(data, roles.target, opt.y0);
    cell y1 = parse_intervention(data, roles.target, opt.y1);

    auto weights_for = [&](const cell& y) {
        return method == adjust_method::backdoor
                   ? backdoor_weights(data, roles.adjust, roles.target, y, overrides)
                   : frontdoor_weights(data, roles.mediator, roles.target, y, overrides);
    };
    auto w1 = weights_for(y1);
    auto w0 = weights_for(y0);
    auto r1 = weighted_response(data, roles.effect, w1);
    auto r0 = weighted_response(data, roles.effect, w0);

    std::vector<double> q1, q0;
    if (opt.quantile > 0.0) {
        q1 = weighted_quantile(data, roles.effect, w1, opt.quantile);
        q0 = weighted_quantile(data, roles.effect, w0, opt.quantile);
    }

    // flattened dimension labels for the output table
    std::vector<std::string> dim_names;
    for (const auto& c : roles.effect) {
        const auto& vi = data.info(c);
        if (vi.kind == var_kind::continuous && vi.dim > 1)
            for (int d = 0; d < vi.dim; ++d)
                dim_names.push_back(c + "[" + std::to_string(d) + "]");
        else
            dim_names.push_back(c);
    }

    std::ostringstream table;
    table << "dimension,response_y0,response_y1,contrast";
    if (opt.quantile > 0.0) table << ",quantile_y0,quantile_y1";
    table << "\n";
    for (size_t d = 0; d < dim_names.size(); ++d) {
        table << csv_quote(dim_names[d]) << ',' << format_double(r0[d]) << ','
              << format_double(r1[d]) << ',' << format_double(r1[d] - r0[d]);
        if (opt.quantile > 0.0) table << ',' << format_double(q0[d]) << ',' << format_double(q1[d]);
        table << "\n";
    }
    std::cout << table.str();
    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path, std::ios::trunc | std::ios::binary);
        if (!out) throw data_error("cannot write '" + opt.out_path + "'");
        out << table.str();
    }
    return 0;
}

struct experiment_options {
    experiment_config cfg;
    std::string out_dir;
    std::string mode = "dirac";
};

int cmd_experiment(const experiment_options& opt) {
    experiment_config cfg = opt.cfg;
    if (opt.mode == "dirac") cfg.mode = bootstrap_spec::mode_t::dirac;
    else if (opt.mode == "smoothed") cfg.mode = bootstrap_spec::mode_t::smoothed;
    else throw config_error("unknown mode '" + opt.mode + "' (dirac|smoothed)");

    auto report = run_experiment(cfg);
    std::cout << format_report_table(report);
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        std::string csv_path = (fs::path(opt.out_dir) / "report.csv").string();
        write_report_csv(report, csv_path);
        write_sidecar((fs::path(opt.out_dir) / "report.meta").string(),
                      {{"experiment", report.experiment},
                       {"method", report.method},
                       {"classifier", report.classifier},
                       {"n", std::to_string(report.n)},
                       {"replicates", std::to_string(report.replicates.size())},
                       {"seed", std::to_string(report.seed)},
                       {"mode", opt.mode},
                       {"generator", k_generator_id}});
        std::cout << "report written to " << csv_path << "\n";
    }
    return 0;
}

struct makeidx_options {
    std::string images_path, labels_path;
    size_t per_class = 1000;
    std::uint64_t seed = 0;
};

int cmd_make_idx(const makeidx_options& opt) {
    auto pool = make_synthetic_digit_pool(opt.per_class, opt.seed);
    save_idx(pool, opt.images_path, opt.labels_path);
    std::cout << "wrote " << pool.size() << " synthetic digit images\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal bootstrapping toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value file mirroring the flags; flags override");

    generate_options gen;
    auto* sub_gen = app.add_subcommand("generate", "generate benchmark environment samples");
    sub_gen->add_option("experiment", gen.experiment,
                        "gauss-backdoor|gauss-frontdoor|mnist-backdoor|mnist-frontdoor|"
                        "parkinsons-backdoor")
        ->required();
    sub_gen->add_option("--out", gen.out_dir, "output directory")->required();
    sub_gen->add_option("--n", gen.n, "rows per environment (0 = experiment default)");
    sub_gen->add_option("--seed", gen.seed, "master seed");
    sub_gen->add_option("--mnist-images", gen.mnist_images, "IDX image file");
    sub_gen->add_option("--mnist-labels", gen.mnist_labels, "IDX label file");
    sub_gen->add_option("--parkinsons", gen.parkinsons_csv, "9-feature table with y,dataset_id");
    sub_gen->add_option("--image-format", gen.image_format, "csv|blob")
        ->check(CLI::IsMember({"csv", "blob"}));

    bootstrap_options boot;
    auto* sub_boot = app.add_subcommand("bootstrap", "draw a deconfounded bootstrap sample");
    sub_boot->add_option("--data", boot.data_path, "observational CSV")->required();
    sub_boot->add_option("--graph", boot.graph_path, "graph spec file");
    sub_boot->add_option("--plan", boot.plan_path, "weight plan file (method=plan)");
    sub_boot->add_option("--method", boot.method, "backdoor|frontdoor|truncated|plan");
    sub_boot->add_option("--mode", boot.mode, "dirac|smoothed");
    sub_boot->add_option("--schedule", boot.schedule, "grouped|mirror|list");
    sub_boot->add_option("--intervene", boot.intervene_list, "schedule=list values v1,v2,...");
    sub_boot->add_option("--seed", boot.seed, "seed");
    sub_boot->add_option("--replicate", boot.replicate, "replicate index");
    sub_boot->add_option("--split-sample", boot.split_folds,
                         "emit provenance-disjoint fold column with k folds");
    sub_boot->add_option("--bandwidth", boot.bandwidths, "per-variable override var=h")
        ->take_all();
    sub_boot->add_flag("--force", boot.force, "skip criteria validation");
    sub_boot->add_option("--out", boot.out_path, "output CSV")->required();

    validate_options val;
    auto* sub_val = app.add_subcommand("validate", "check adjustment criteria on a graph");
    sub_val->add_option("--graph", val.graph_path, "graph spec file")->required();
    sub_val->add_option("--method", val.method, "backdoor|frontdoor|truncated");

    ate_options ate;
    auto* sub_ate = app.add_subcommand("ate", "interventional response and contrast table");
    sub_ate->add_option("--data", ate.data_path, "observational CSV")->required();
    sub_ate->add_option("--graph", ate.graph_path, "graph spec file")->required();
    sub_ate->add_option("--method", ate.method, "backdoor|frontdoor");
    sub_ate->add_option("--y0", ate.y0, "baseline intervention value")->required();
    sub_ate->add_option("--y1", ate.y1, "treatment intervention value")->required();
    sub_ate->add_option("--quantile", ate.quantile, "also report this weighted quantile");
    sub_ate->add_option("--bandwidth", ate.bandwidths, "per-variable override var=h")->take_all();
    sub_ate->add_flag("--force", ate.force, "skip criteria validation");
    sub_ate->add_option("--out", ate.out_path, "write the table as CSV");

    experiment_options exp;
    auto* sub_exp = app.add_subcommand("experiment", "replicated 2x2 train/test accuracy grid");
    sub_exp->add_option("experiment", exp.cfg.experiment,
                        "gauss-backdoor|gauss-frontdoor|mnist-backdoor|mnist-frontdoor|"
                        "parkinsons-backdoor|custom")
        ->required();
    sub_exp->add_option("--n", exp.cfg.n, "rows per environment (0 = experiment default)");
    sub_exp->add_option("--replicates", exp.cfg.replicates, "replicate count");
    sub_exp->add_option("--seed", exp.cfg.seed, "master seed");
    sub_exp->add_option("--classifier", exp.cfg.classifier, "lda|forest");
    sub_exp->add_option("--trees", exp.cfg.forest.trees, "forest size");
    sub_exp->add_option("--max-features", exp.cfg.forest.max_features,
                        "features per split (0 = ceil(sqrt(d)))");
    sub_exp->add_option("--min-leaf", exp.cfg.forest.min_leaf, "minimum samples per leaf");
    sub_exp->add_option("--max-depth", exp.cfg.forest.max_depth, "depth cap (0 = unlimited)");
    sub_exp->add_option("--mode", exp.mode, "dirac|smoothed");
    sub_exp->add_option("--mnist-images", exp.cfg.mnist_images, "IDX image file");
    sub_exp->add_option("--mnist-labels", exp.cfg.mnist_labels, "IDX label file");
    sub_exp->add_option("--parkinsons", exp.cfg.parkinsons_csv, "feature table CSV");
    sub_exp->add_option("--data-e1", exp.cfg.data_e1, "custom: training environment CSV");
    sub_exp->add_option("--data-e2", exp.cfg.data_e2, "custom: confounded test CSV");
    sub_exp->add_option("--data-e3", exp.cfg.data_e3, "custom: non-confounded test CSV");
    sub_exp->add_option("--graph", exp.cfg.graph_file, "custom: graph spec file");
    sub_exp->add_option("--plan", exp.cfg.plan_file, "custom: weight plan file");
    sub_exp->add_option("--method", exp.cfg.method, "custom: backdoor|frontdoor|truncated|plan");
    sub_exp->add_option("--out", exp.out_dir, "directory for report.csv + report.meta");

    makeidx_options mk;
    auto* sub_mk = app.add_subcommand(
        "make-idx", "write a synthetic stand-in digit pool in the IDX format");
    sub_mk->add_option("--out-images", mk.images_path, "IDX image output")->required();
    sub_mk->add_option("--out-labels", mk.labels_path, "IDX label output")->required();
    sub_mk->add_option("--per-class", mk.per_class, "images per digit class");
    sub_mk->add_option("--seed", mk.seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sub_gen->parsed()) return cmd_generate(gen);
        if (sub_boot->parsed()) return cmd_bootstrap(boot);
        if (sub_val->parsed()) return cmd_validate(val);
        if (sub_ate->parsed()) return cmd_ate(ate);
        if (sub_exp->parsed()) return cmd_experiment(exp);
        if (sub_mk->parsed()) return cmd_make_idx(mk);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const criteria_error& e) {
        std::cerr << "criteria violation: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
