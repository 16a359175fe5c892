// klsh: command-line driver for kernelized LSH experiments.
//
//   klsh synth     generate a clustered histogram corpus and query set
//   klsh truth     exact nearest neighbours of queries (ivecs)
//   klsh build     sample anchors, train a hash bank, write a snapshot
//   klsh eval      Recall@R for a snapshot or a rank x scale sweep
//   klsh diagnose  spectral decay, elimination and bound reports
//
// Exit codes: 0 success, 1 validation error, 2 runtime or numeric error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "klsh/klsh.hpp"

namespace {

namespace fs = std::filesystem;
using namespace klsh;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ValidationError("empty list '" + text + "'");
    return out;
}

std::size_t parse_count(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size() || v < 0) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ValidationError(std::string("invalid ") + what + " '" + s + "'");
    }
}

double parse_real(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(std::string("invalid ") + what + " '" + s + "'");
    }
}

std::vector<std::optional<std::size_t>> parse_ranks(const std::string& text) {
    std::vector<std::optional<std::size_t>> out;
    for (const auto& item : split_list(text)) {
        if (item == "full") {
            out.emplace_back(std::nullopt);
        } else {
            const std::size_t r = parse_count(item, "rank");
            if (r == 0) throw ValidationError("rank must be at least 1");
            out.emplace_back(r);
        }
    }
    return out;
}

std::vector<double> parse_reals(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_real(item, what));
    return out;
}

std::vector<std::size_t> parse_counts(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) out.push_back(parse_count(item, what));
    return out;
}

/// Reads, drops all-zero vectors and L1-normalizes.
Corpus load_dataset(const std::string& path) {
    Corpus raw = read_corpus(path);
    if (raw.empty()) throw ValidationError("dataset '" + path + "' is empty");
    Corpus kept = drop_zero(raw);
    if (kept.size() != raw.size()) {
        std::cerr << "note: dropped " << raw.size() - kept.size() << " all-zero vectors from " << path << '\n';
    }
    if (kept.empty()) throw ValidationError("dataset '" + path + "' has no nonzero vectors");
    return normalize_l1(std::move(kept));
}

struct RunConfig {
    std::string dataset;
    std::string queries;
    std::string truth;
    std::string model;
    std::string kernel = "chi2";
    bool normalize = false;
    std::string scale = "1";
    std::size_t m = 1000;
    std::size_t t = 50;
    std::size_t bits = 256;
    std::string rank = "full";
    std::string variant = "clt";
    std::uint64_t seed = 0;
    std::string recall_at = "1,10,100";
    std::string out;
    bool oracle = false;
    bool center_queries = false;

    [[nodiscard]] KernelSpec kernel_spec(double s) const {
        KernelSpec spec{parse_base_kernel(kernel), normalize, s};
        spec.validate();
        return spec;
    }

    [[nodiscard]] Echo echo(const std::string& command) const {
        Echo e{{"command", command}};
        auto add = [&](const char* k, const std::string& v) {
            if (!v.empty()) e.emplace_back(k, v);
        };
        add("dataset", dataset);
        add("queries", queries);
        add("truth", truth);
        add("model", model);
        e.emplace_back("kernel", kernel);
        e.emplace_back("normalize", normalize ? "true" : "false");
        e.emplace_back("scale", scale);
        e.emplace_back("m", std::to_string(m));
        e.emplace_back("t", std::to_string(t));
        e.emplace_back("bits", std::to_string(bits));
        e.emplace_back("rank", rank);
        e.emplace_back("variant", variant);
        e.emplace_back("seed", std::to_string(seed));
        e.emplace_back("recall_at", recall_at);
        e.emplace_back("oracle", oracle ? "true" : "false");
        e.emplace_back("center_queries", center_queries ? "true" : "false");
        return e;
    }
};

void add_kernel_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--kernel", cfg.kernel, "chi2 | intersection | linear")->capture_default_str();
    cmd->add_flag("--normalize", cfg.normalize, "normalize the kernel by sqrt(k(x,x) k(y,y))");
}

void add_model_options(CLI::App* cmd, RunConfig& cfg) {
    add_kernel_options(cmd, cfg);
    cmd->add_option("--m", cfg.m, "number of anchors")->capture_default_str();
    cmd->add_option("--t", cfg.t, "anchors per CLT hyperplane")->capture_default_str();
    cmd->add_option("--bits", cfg.bits, "hash bits")->capture_default_str();
    cmd->add_option("--variant", cfg.variant, "clt | gaussian | nystrom-baseline")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    cmd->add_flag("--center-queries", cfg.center_queries, "apply KPCA centering to query kernel vectors");
}

void print_spectrum_summary(const ProjectionModel& model) {
    std::cout << "anchors: " << model.m() << "  numeric rank: " << model.numeric_rank()
              << "  rank used: " << model.rank << '\n';
    for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k < model.m() && k <= model.numeric_rank(); k *= 2) ks.push_back(k);
    if (ks.empty()) return;
    std::cout << "k,lambda,delta,tail_mass\n";
    for (const DecayRow& r : decay_report(model.spectrum, ks)) {
        std::cout << r.k << ',' << format_real(r.lambda) << ',' << format_real(r.delta) << ','
                  << format_real(r.tail_mass) << (r.zero_eigengap ? ",zero eigengap" : "") << '\n';
    }
}

int cmd_synth(std::size_t n, std::size_t d, std::size_t clusters, double concentration, std::uint64_t seed,
              std::size_t query_count, const std::string& out, const std::string& queries_out) {
    if (!queries_out.empty() && query_count == 0) throw ValidationError("--query-count must be positive");
    auto synth = synth_histograms(n + (queries_out.empty() ? 0 : query_count), d, clusters, concentration, seed);
    if (queries_out.empty()) {
        write_fvecs(out, synth.corpus);
    } else {
        auto [db, q] = split_tail(synth.corpus, query_count);
        write_fvecs(out, db);
        write_fvecs(queries_out, q);
    }
    std::cout << "wrote " << n << " vectors to " << out << '\n';
    return 0;
}

int cmd_truth(const RunConfig& cfg, std::size_t topk) {
    if (topk == 0) throw ValidationError("--topk must be positive");
    const KernelSpec kernel = cfg.kernel_spec(1.0);
    const Corpus corpus = load_dataset(cfg.dataset);
    const Corpus queries = load_dataset(cfg.queries);
    std::vector<std::vector<std::int32_t>> lists(queries.size());
    parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            for (std::uint32_t id : exact_nn(kernel, corpus, queries.row(q), topk)) {
                lists[q].push_back(static_cast<std::int32_t>(id));
            }
        }
    }, 4);
    write_ivecs(cfg.out, lists);
    std::cout << "wrote ground truth for " << queries.size() << " queries to " << cfg.out << '\n';
    return 0;
}

int cmd_build(const RunConfig& cfg, const std::string& codes_out) {
    const auto scales = parse_reals(cfg.scale, "scale");
    if (scales.size() != 1) throw ValidationError("build takes a single --scale");
    const auto ranks = parse_ranks(cfg.rank);
    if (ranks.size() != 1) throw ValidationError("build takes a single --rank");
    const Method method = parse_method(cfg.variant);
    const KernelSpec kernel = cfg.kernel_spec(scales.front());
    const Corpus corpus = load_dataset(cfg.dataset);

    BankConfig bc;
    bc.m = cfg.m;
    bc.t = cfg.t;
    bc.bits = cfg.bits;
    bc.rank = ranks.front();
    bc.variant = hash_variant(method);
    bc.embedding = embedding_variant(method);
    bc.center_queries = cfg.center_queries;
    bc.seed = cfg.seed;
    SweepConfig check;
    check.m = cfg.m;
    check.t = cfg.t;
    check.bits = cfg.bits;
    check.method = method;
    check.validate(corpus.size());

    const HashBank bank = train_bank(corpus, kernel, bc);
    write_snapshot(cfg.out, bank.model, &bank);
    print_spectrum_summary(bank.model);
    std::cout << "variant: " << to_string(method) << "  bits: " << bank.bits << "  seed: " << bank.seed << '\n';
    std::cout << "snapshot written to " << cfg.out << '\n';
    if (!codes_out.empty()) {
        write_codeset(codes_out, hash_corpus(bank, corpus));
        std::cout << "codes written to " << codes_out << '\n';
    }
    return 0;
}

std::vector<std::uint32_t> truth_ids(const RunConfig& cfg, const KernelSpec& kernel, const Corpus& corpus,
                                     const Corpus& queries, std::size_t& tied) {
    tied = 0;
    if (cfg.oracle) {
        GroundTruth gt = ground_truth(kernel, corpus, queries);
        tied = gt.tied_queries;
        return gt.nearest;
    }
    if (cfg.truth.empty()) throw ValidationError("ground truth missing: pass --truth FILE or --oracle");
    const auto lists = read_ivecs(cfg.truth);
    if (lists.size() != queries.size()) {
        throw ValidationError("truth file has " + std::to_string(lists.size()) + " records for " +
                              std::to_string(queries.size()) + " queries");
    }
    std::vector<std::uint32_t> ids;
    for (const auto& l : lists) {
        if (l.empty() || l.front() < 0) throw ValidationError("truth file has an empty or negative record");
        ids.push_back(static_cast<std::uint32_t>(l.front()));
    }
    return ids;
}

void write_eval_outputs(const std::string& prefix, const std::vector<EvalReport>& reports, const Echo& echo) {
    for (const EvalReport& r : reports) {
        std::cout << "scale=" << format_real(r.params.scale) << " rank=" << r.params.rank_label << " ("
                  << r.params.rank << ")";
        for (const auto& [R, v] : r.recall_at) std::cout << "  R@" << R << '=' << format_real(v);
        std::cout << '\n';
    }
    if (prefix.empty()) return;
    std::ofstream csv(prefix + ".csv");
    std::ofstream json(prefix + ".json");
    if (!csv || !json) throw Error("cannot write reports with prefix '" + prefix + "'");
    write_recall_csv(csv, reports, echo);
    write_recall_json(json, reports, echo);
    std::cout << "reports written to " << prefix << ".csv and " << prefix << ".json\n";
}

int cmd_eval(const RunConfig& cfg) {
    const auto Rs = parse_counts(cfg.recall_at, "recall-at value");
    const Corpus corpus = load_dataset(cfg.dataset);
    const Corpus queries = load_dataset(cfg.queries);
    std::size_t tied = 0;

    if (!cfg.model.empty()) {
        const Snapshot snap = read_snapshot(cfg.model);
        if (!snap.bank) throw ValidationError("snapshot '" + cfg.model + "' holds no hash bank");
        const HashBank& bank = *snap.bank;
        if (bank.model.anchors.dim != corpus.dim) throw ValidationError("snapshot dimension does not match dataset");
        const auto truth = truth_ids(cfg, bank.model.kernel, corpus, queries, tied);
        for (std::size_t R : Rs) {
            if (R == 0) throw ValidationError("recall-at values must be at least 1");
        }
        const std::size_t max_R = std::min(corpus.size(), *std::max_element(Rs.begin(), Rs.end()));
        const auto retrieved = retrieve_all(hash_corpus(bank, corpus), hash_corpus(bank, queries), max_R);
        EvalReport report = recall_at_R(retrieved, truth, Rs);
        const bool nystrom = bank.model.variant == EmbeddingVariant::nystrom;
        const std::string variant =
            nystrom ? "nystrom-baseline" : std::string(to_string(bank.variant));
        const bool full = bank.model.rank == bank.model.numeric_rank();
        report.params = {std::string(to_string(bank.model.kernel.base)), bank.model.kernel.normalize,
                         bank.model.kernel.scale, bank.model.m(), bank.t, bank.bits, bank.model.rank,
                         full ? "full" : std::to_string(bank.model.rank), variant, bank.seed};
        report.tied_queries = tied;
        write_eval_outputs(cfg.out, {report}, cfg.echo("eval"));
        return 0;
    }

    SweepConfig sweep;
    sweep.kernel = cfg.kernel_spec(1.0);
    sweep.scales = parse_reals(cfg.scale, "scale");
    sweep.ranks = parse_ranks(cfg.rank);
    sweep.m = cfg.m;
    sweep.t = cfg.t;
    sweep.bits = cfg.bits;
    sweep.method = parse_method(cfg.variant);
    sweep.center_queries = cfg.center_queries;
    sweep.seed = cfg.seed;
    sweep.recall_at = Rs;
    sweep.validate(corpus.size());
    const auto truth = truth_ids(cfg, sweep.kernel, corpus, queries, tied);
    auto reports = run_sweep(corpus, queries, truth, sweep);
    for (auto& r : reports) r.tied_queries = tied;
    write_eval_outputs(cfg.out, reports, cfg.echo("eval"));
    return 0;
}

int cmd_diagnose(const RunConfig& cfg, const std::string& ks_text, const std::string& eps_text, double xi,
                 double kappa_star) {
    const auto eps_values = parse_reals(eps_text, "eps");
    if (!(xi > 0.0)) throw ValidationError("--xi must be positive");
    if (kappa_star < 0.0 || kappa_star > 1.0) throw ValidationError("--kappa-star must lie in [0, 1]");
    const auto ks_requested = parse_counts(ks_text, "k");

    std::vector<ProjectionModel> models;
    std::vector<double> scales;
    if (!cfg.model.empty()) {
        models.push_back(read_snapshot(cfg.model).model);
        scales.push_back(models.back().kernel.scale);
    } else {
        if (cfg.dataset.empty()) throw ValidationError("diagnose needs --model or --dataset");
        const Corpus corpus = load_dataset(cfg.dataset);
        if (cfg.m == 0 || cfg.m > corpus.size()) throw ValidationError("m must satisfy 1 <= m <= corpus size");
        for (double s : parse_reals(cfg.scale, "scale")) {
            Rng rng(cfg.seed);
            const auto positions = sample_without_replacement(corpus.size(), cfg.m, rng);
            models.push_back(build_model(corpus.subset(positions), cfg.kernel_spec(s)));
            scales.push_back(s);
        }
    }
    std::optional<Corpus> points;
    if (!cfg.queries.empty()) points = load_dataset(cfg.queries);

    std::vector<DecaySeries> decay;
    std::vector<BoundSeries> bounds;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const ProjectionModel& model = models[i];
        std::vector<std::size_t> ks;
        for (std::size_t k : ks_requested) {
            if (k >= 1 && k < model.m()) ks.push_back(k);
        }
        if (ks.empty()) throw ValidationError("no requested k lies in [1, m-1]");
        decay.push_back({scales[i], model.numeric_rank(), decay_report(model.spectrum, ks)});

        BoundSeries bs;
        bs.scale = scales[i];
        bs.bounds = bound_grid(model.spectrum, ks, xi, eps_values, kappa_star);
        const Corpus& dataset = points ? *points : model.anchors;
        for (std::size_t k : ks) {
            if (k > model.numeric_rank()) {
                bs.notes.push_back("k=" + std::to_string(k) + " exceeds numeric rank; elimination skipped");
                continue;
            }
            try {
                bs.elimination.push_back(elimination_diagnostic(model, dataset, k, xi));
            } catch (const NumericError& e) {
                bs.notes.push_back("k=" + std::to_string(k) + ": " + e.what());
            }
        }
        for (const auto& row : bs.bounds) {
            if (row.zero_eigengap && row.eps == eps_values.front()) {
                bs.notes.push_back("k=" + std::to_string(row.k) + ": zero eigengap");
            }
        }
        for (const auto& n : bs.notes) std::cerr << "note (scale " << format_real(scales[i]) << "): " << n << '\n';
        bounds.push_back(std::move(bs));

        std::cout << "scale=" << format_real(scales[i]) << " numeric_rank=" << model.numeric_rank() << '\n';
        for (const DecayRow& r : decay.back().rows) {
            std::cout << "  k=" << r.k << " lambda=" << format_real(r.lambda) << " delta=" << format_real(r.delta)
                      << " tail_mass=" << format_real(r.tail_mass) << (r.zero_eigengap ? " [zero eigengap]" : "")
                      << '\n';
        }
    }

    if (!cfg.out.empty()) {
        Echo echo = cfg.echo("diagnose");
        echo.emplace_back("ks", ks_text);
        echo.emplace_back("eps", eps_text);
        echo.emplace_back("xi", format_real(xi));
        echo.emplace_back("kappa_star", format_real(kappa_star));
        std::ofstream decay_csv(cfg.out + "_decay.csv");
        std::ofstream bounds_csv(cfg.out + "_bounds.csv");
        std::ofstream elim_csv(cfg.out + "_elimination.csv");
        std::ofstream json(cfg.out + ".json");
        if (!decay_csv || !bounds_csv || !elim_csv || !json) throw Error("cannot write diagnose reports");
        write_decay_csv(decay_csv, decay, echo);
        write_bounds_csv(bounds_csv, bounds, echo);
        write_elimination_csv(elim_csv, bounds, echo);
        write_diagnose_json(json, decay, bounds, echo);
        std::cout << "reports written with prefix " << cfg.out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernelized LSH: KPCA-projected hashing, rank and scale sweeps, retrieval-bound diagnostics"};
    app.require_subcommand(1);
    RunConfig cfg;

    std::size_t synth_n = 20000, synth_d = 64, synth_clusters = 50, synth_queries = 500;
    double synth_concentration = 50.0;
    std::string synth_queries_out;
    auto* synth = app.add_subcommand("synth", "generate a clustered histogram corpus");
    synth->add_option("--n", synth_n, "database size")->capture_default_str();
    synth->add_option("--d", synth_d, "dimension")->capture_default_str();
    synth->add_option("--clusters", synth_clusters, "number of clusters")->capture_default_str();
    synth->add_option("--concentration", synth_concentration, "Dirichlet concentration around centers")
        ->capture_default_str();
    synth->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    synth->add_option("--query-count", synth_queries, "number of queries")->capture_default_str();
    synth->add_option("--queries-out", synth_queries_out, "query output path (.fvecs)");
    synth->add_option("--out", cfg.out, "database output path (.fvecs)")->required();

    std::size_t topk = 1;
    auto* truth = app.add_subcommand("truth", "exact nearest neighbours (ivecs)");
    truth->add_option("--dataset", cfg.dataset, "database file")->required();
    truth->add_option("--queries", cfg.queries, "query file")->required();
    truth->add_option("--topk", topk, "neighbours per query")->capture_default_str();
    truth->add_option("--out", cfg.out, "output .ivecs")->required();
    add_kernel_options(truth, cfg);

    std::string codes_out;
    auto* build = app.add_subcommand("build", "train a hash bank and write a snapshot");
    build->add_option("--dataset", cfg.dataset, "database file (.fvecs, .bvecs, .csv)")->required();
    build->add_option("--scale", cfg.scale, "exponential transform scale s (1 = none)")->capture_default_str();
    build->add_option("--rank", cfg.rank, "rank or 'full'")->capture_default_str();
    build->add_option("--out", cfg.out, "snapshot path")->required();
    build->add_option("--codes", codes_out, "also write the corpus code set here");
    add_model_options(build, cfg);

    auto* eval = app.add_subcommand("eval", "Recall@R evaluation and rank/scale sweeps");
    eval->add_option("--dataset", cfg.dataset, "database file")->required();
    eval->add_option("--queries", cfg.queries, "query file")->required();
    eval->add_option("--truth", cfg.truth, "ground-truth .ivecs (first id per record)");
    eval->add_flag("--oracle", cfg.oracle, "compute ground truth by exhaustive kernel search");
    eval->add_option("--model", cfg.model, "evaluate this snapshot instead of training");
    eval->add_option("--scale", cfg.scale, "scale list, e.g. 1,3,5,7,9")->capture_default_str();
    eval->add_option("--rank", cfg.rank, "rank list, e.g. 16,32,64,full")->capture_default_str();
    eval->add_option("--recall-at", cfg.recall_at, "R list")->capture_default_str();
    eval->add_option("--out", cfg.out, "report prefix (writes PREFIX.csv and PREFIX.json)");
    add_model_options(eval, cfg);

    std::string ks_text = "1,2,4,8,16,32,64,128,256,512";
    std::string eps_text = "0.1,0.5,1.0";
    double xi = 3.0;
    double kappa_star = 1.0;
    auto* diagnose = app.add_subcommand("diagnose", "spectral decay, elimination and bound reports");
    diagnose->add_option("--model", cfg.model, "snapshot to diagnose");
    diagnose->add_option("--dataset", cfg.dataset, "database file (builds models when no snapshot is given)");
    diagnose->add_option("--queries", cfg.queries, "points for the elimination check (default: anchors)");
    diagnose->add_option("--scale", cfg.scale, "scale list")->capture_default_str();
    diagnose->add_option("--ks", ks_text, "k list")->capture_default_str();
    diagnose->add_option("--eps", eps_text, "epsilon list")->capture_default_str();
    diagnose->add_option("--xi", xi, "confidence parameter xi")->capture_default_str();
    diagnose->add_option("--kappa-star", kappa_star, "nearest-neighbour similarity used in the bound")
        ->capture_default_str();
    diagnose->add_option("--out", cfg.out, "report prefix");
    add_kernel_options(diagnose, cfg);
    diagnose->add_option("--m", cfg.m, "number of anchors")->capture_default_str();
    diagnose->add_option("--seed", cfg.seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            return cmd_synth(synth_n, synth_d, synth_clusters, synth_concentration, cfg.seed, synth_queries, cfg.out,
                             synth_queries_out);
        }
        if (*truth) return cmd_truth(cfg, topk);
        if (*build) return cmd_build(cfg, codes_out);
        if (*eval) return cmd_eval(cfg);
        if (*diagnose) return cmd_diagnose(cfg, ks_text, eps_text, xi, kappa_star);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
