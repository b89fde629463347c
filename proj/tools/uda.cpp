#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "uda/config.hpp"
#include "uda/errors.hpp"
#include "uda/gradcheck.hpp"
#include "uda/trainer.hpp"

#ifndef UDA_VERSION
#define UDA_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace uda;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Config sources shared by every subcommand: --config FILE plus one flag per key.
struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "flat key = value config file");
        const ConfigEntries defaults = to_entries(RunConfig{});
        for (const std::string& key : config_keys()) {
            app->add_option("--" + key, overrides[key], "default " + defaults.at(key))
                ->type_name("VALUE")
                ->group("Config keys");
        }
    }

    // defaults < `base` (file or manifest entries) < flags
    RunConfig resolve(const CLI::App* app, ConfigEntries base = {}) const {
        if (!config_path.empty()) {
            for (const auto& [k, v] : load_config(config_path)) base[k] = v;
        }
        for (const auto& [key, value] : overrides) {
            if (app->count("--" + key) > 0) base[key] = value;
        }
        return apply_config(RunConfig{}, base);
    }
};

struct Inputs {
    std::string source;
    std::string target;
    std::string truth;
    std::string eval;

    void attach(CLI::App* app) {
        app->add_option("--source", source, "labeled source feature CSV");
        app->add_option("--target", target, "target feature CSV (labels ignored)");
        app->add_option("--truth", truth, "labeled target CSV used only for clustering metrics");
        app->add_option("--eval", eval, "labeled held-out target CSV for retrieval metrics");
    }

    bool from_files() const { return !source.empty() || !target.empty(); }

    json to_json() const {
        auto opt = [](const std::string& s) { return s.empty() ? json(nullptr) : json(s); };
        return json{{"source", opt(source)}, {"target", opt(target)}, {"truth", opt(truth)}, {"eval", opt(eval)}};
    }

    void from_json(const json& j) {
        auto get = [&](const char* k) { return j.contains(k) && j[k].is_string() ? j[k].get<std::string>() : ""; };
        source = get("source");
        target = get("target");
        truth = get("truth");
        eval = get("eval");
    }
};

struct Dataset {
    std::vector<LabeledSample> source;
    std::vector<Sample> target;
    EvaluationProbe probe;
};

Dataset load_dataset(const Inputs& in, const RunConfig& cfg) {
    Dataset d;
    if (!in.from_files()) {
        SyntheticData g = generate(cfg.data);
        d.source = std::move(g.source);
        d.target = std::move(g.target);
        d.probe = EvaluationProbe{std::move(g.target_hidden_labels), std::move(g.target_eval)};
        return d;
    }
    if (in.source.empty() || in.target.empty()) throw std::runtime_error("--source and --target go together");
    d.source = labeled_samples_from(load_features(in.source), Domain::source);
    d.target = samples_from(load_features(in.target), Domain::target);
    if (!in.truth.empty()) {
        std::map<std::int64_t, int> by_id;
        for (const FeatureRow& r : load_features(in.truth).rows) {
            if (!r.label) throw std::runtime_error(in.truth + ": truth rows need labels");
            by_id[r.instance_id] = *r.label;
        }
        for (const Sample& s : d.target) {
            const auto it = by_id.find(s.instance_id);
            if (it == by_id.end()) {
                throw std::runtime_error(in.truth + ": no label for instance " + std::to_string(s.instance_id));
            }
            d.probe.target_labels.push_back(it->second);
        }
    }
    if (!in.eval.empty()) d.probe.eval = labeled_samples_from(load_features(in.eval), Domain::target);
    return d;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return json::parse(in);
}

json entries_json(const ConfigEntries& entries) {
    json j = json::object();
    for (const std::string& key : config_keys()) j[key] = entries.at(key);
    return j;
}

std::string metrics_text(const std::vector<EpochRecord>& records) {
    std::string out;
    for (const EpochRecord& r : records) out += to_json_line(r) + "\n";
    return out;
}

// train / baseline
struct TrainCommand {
    ConfigFlags flags;
    Inputs inputs;
    std::string out_dir = "run";
    std::string manifest;
    bool baseline = false;

    CLI::App* attach(CLI::App& app, const char* name, const char* help, bool is_baseline) {
        baseline = is_baseline;
        CLI::App* sub = app.add_subcommand(name, help);
        flags.attach(sub);
        inputs.attach(sub);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--manifest", manifest, "rerun from a previous run's manifest.json");
        return sub;
    }

    int run(const CLI::App* sub) {
        ConfigEntries base;
        if (!manifest.empty()) {
            const json m = read_json(manifest);
            for (const auto& [k, v] : m.at("config").items()) base[k] = v.get<std::string>();
            Inputs from_manifest;
            from_manifest.from_json(m.at("inputs"));
            if (!inputs.from_files()) inputs = from_manifest;
        }
        const RunConfig cfg = flags.resolve(sub, base);
        const Dataset data = load_dataset(inputs, cfg);

        fs::create_directories(out_dir);
        const fs::path metrics = fs::path(out_dir) / "metrics.jsonl";
        const fs::path model = fs::path(out_dir) / "model.bin";
        const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
        const TrainConfig tc = baseline ? baseline_config(cfg.train) : cfg.train;

        RunConfig resolved = cfg;
        resolved.train = tc;
        json m;
        m["tool"] = "uda";
        m["version"] = UDA_VERSION;
        m["command"] = baseline ? "baseline" : "train";
        m["seed"] = cfg.seed;
        m["config"] = entries_json(to_entries(resolved));
        m["inputs"] = inputs.to_json();
        m["outputs"] = json{{"metrics", metrics.string()}, {"model", model.string()}, {"manifest", manifest_path.string()}};
        write_text(manifest_path, m.dump(2) + "\n");

        const EvaluationProbe* probe =
            data.probe.target_labels.empty() && data.probe.eval.empty() ? nullptr : &data.probe;
        try {
            const TrainResult r = train(data.source, data.target, tc, probe);
            write_text(metrics, metrics_text(r.records));
            save_model(model, r.momentum);
            const EpochRecord& last = r.records.back();
            std::cout << "epochs " << r.records.size() << ", clusters " << last.num_clusters;
            if (last.mAP) std::cout << ", mAP " << *last.mAP << ", rank-1 " << *last.rank1;
            std::cout << "\nwrote " << metrics.string() << ", " << model.string() << ", " << manifest_path.string()
                      << "\n";
        } catch (const TrainingAborted& e) {
            write_text(metrics, metrics_text(e.records));
            std::cerr << "training aborted: " << e.what() << "\n";
            return kExitRuntime;
        }
        return 0;
    }
};

struct GenerateCommand {
    ConfigFlags flags;
    std::string out_dir = "data";

    CLI::App* attach(CLI::App& app) {
        CLI::App* sub = app.add_subcommand("generate", "write a synthetic two-domain dataset as feature CSVs");
        flags.attach(sub);
        sub->add_option("--out", out_dir, "output directory");
        return sub;
    }

    int run(const CLI::App* sub) {
        const RunConfig cfg = flags.resolve(sub);
        const SyntheticData d = generate(cfg.data);
        fs::create_directories(out_dir);
        const fs::path dir(out_dir);
        save_features(dir / "source.csv", to_table(d.source));
        save_features(dir / "target.csv", to_table(d.target));
        std::vector<LabeledSample> truth;
        for (std::size_t i = 0; i < d.target.size(); ++i) truth.push_back({d.target[i], d.target_hidden_labels[i]});
        save_features(dir / "target_truth.csv", to_table(truth));
        save_features(dir / "eval.csv", to_table(d.target_eval));
        std::cout << "wrote " << d.source.size() << " source, " << d.target.size() << " target and "
                  << d.target_eval.size() << " eval samples to " << out_dir << "\n";
        return 0;
    }
};

struct AblateCommand {
    ConfigFlags flags;
    Inputs inputs;
    std::string grid = "policy";
    std::string out = "ablation.csv";
    int seeds = 1;

    CLI::App* attach(CLI::App& app) {
        CLI::App* sub = app.add_subcommand("ablate", "run an ablation grid and write a CSV table");
        flags.attach(sub);
        inputs.attach(sub);
        sub->add_option("--grid", grid, "queue | policy | loss")->check(CLI::IsMember({"queue", "policy", "loss"}));
        sub->add_option("--out", out, "CSV output path");
        sub->add_option("--seeds", seeds, "seeds per cell, starting at the configured seed")->check(CLI::PositiveNumber);
        return sub;
    }

    struct Cell {
        std::string name;
        std::string params;
        TrainConfig cfg;
    };

    std::vector<Cell> cells(const TrainConfig& base) const {
        std::vector<Cell> out;
        if (grid == "queue") {
            for (std::size_t q : {512u, 1024u, 2048u}) {
                TrainConfig c = base;
                c.queue_capacity = q;
                out.push_back({"queue", "memory.queue_capacity=" + std::to_string(q), c});
            }
        } else if (grid == "policy") {
            for (int k : {2, 3, 4}) {
                TrainConfig c = base;
                c.schedule.kind = PolicyKind::k_step;
                c.schedule.k = k;
                out.push_back({std::to_string(k) + "-step", "schedule.k=" + std::to_string(k), c});
            }
            TrainConfig lin = base;
            lin.schedule.kind = PolicyKind::linear;
            out.push_back({"linear", "schedule.kind=linear", lin});
            for (double ls : {0.8, 0.5, 0.2}) {
                TrainConfig c = base;
                c.schedule.kind = PolicyKind::static_weights;
                c.schedule.static_source = ls;
                c.schedule.static_target = 1.0 - ls;
                std::ostringstream p;
                p << "schedule.lambda_s=" << ls << ";schedule.lambda_t=" << 1.0 - ls;
                out.push_back({"static", p.str(), c});
            }
        } else {
            for (double delta : {0.01, 0.1, 1.0}) {
                for (double gamma : {0.0, 0.5, 0.7, 1.0}) {
                    TrainConfig c = base;
                    c.delta = delta;
                    c.gamma = gamma;
                    std::ostringstream p;
                    p << "loss.delta=" << delta << ";loss.gamma=" << gamma;
                    out.push_back({"loss", p.str(), c});
                }
            }
        }
        return out;
    }

    int run(const CLI::App* sub) {
        const RunConfig base = flags.resolve(sub);
        std::ostringstream csv;
        csv << "method,params,seeds,mAP,rank1,aborted\n";
        int failures = 0;
        for (const Cell& cell : cells(base.train)) {
            double map = 0.0;
            double r1 = 0.0;
            int aborted = 0;
            for (int s = 0; s < seeds; ++s) {
                RunConfig rc = base;
                rc.seed = base.seed + static_cast<std::uint64_t>(s);
                rc.data.seed = rc.seed;
                TrainConfig tc = cell.cfg;
                tc.seed = rc.seed;
                const Dataset d = load_dataset(inputs, rc);
                if (d.probe.eval.empty()) throw std::runtime_error("ablate needs an evaluation split (--eval)");
                std::vector<EpochRecord> records;
                try {
                    records = train(d.source, d.target, tc, &d.probe).records;
                } catch (const TrainingAborted& e) {
                    records = e.records;
                    ++aborted;
                }
                map += *records.back().mAP;
                r1 += *records.back().rank1;
            }
            failures += aborted;
            csv << cell.name << "," << cell.params << "," << seeds << "," << map / seeds << "," << r1 / seeds << ","
                << aborted << "\n";
            std::cerr << cell.name << " " << cell.params << ": mAP " << map / seeds << "\n";
        }
        write_text(out, csv.str());
        std::cout << "wrote " << out << "\n";
        return 0;
    }
};

json retrieval_json(const RetrievalResult& r) {
    return json{{"mAP", r.mAP},
                {"rank1", r.rank1()},
                {"cmc", r.cmc},
                {"queries", r.evaluated_queries},
                {"skipped_queries", r.skipped_queries}};
}

struct EvalCommand {
    std::string model;
    std::string features;
    std::size_t stride = 5;
    std::size_t max_rank = 10;

    CLI::App* attach(CLI::App& app) {
        CLI::App* sub = app.add_subcommand("eval", "score a saved model on a labeled feature CSV");
        sub->add_option("--model", model, "model.bin")->required();
        sub->add_option("--features", features, "labeled feature CSV")->required();
        sub->add_option("--stride", stride, "every stride-th sample is a query");
        sub->add_option("--max-rank", max_rank, "CMC length");
        return sub;
    }

    int run() {
        const EncoderState enc = load_model(model);
        const auto samples = labeled_samples_from(load_features(features), Domain::target);
        RetrievalSet all;
        for (const LabeledSample& s : samples) {
            all.features.push_back(encode(enc, s.sample.input));
            all.labels.push_back(s.label);
            all.cameras.push_back(s.sample.camera_id);
            all.instance_ids.push_back(s.sample.instance_id);
        }
        const auto [query, gallery] = split_query_gallery(all, stride);
        std::cout << retrieval_json(evaluate(query, gallery, max_rank)).dump() << "\n";
        return 0;
    }
};

struct ClusterCommand {
    ConfigFlags flags;
    std::string model;
    std::string features;
    std::string out;

    CLI::App* attach(CLI::App& app) {
        CLI::App* sub = app.add_subcommand("cluster", "run DBSCAN on a feature CSV, optionally through a model");
        flags.attach(sub);
        sub->add_option("--features", features, "feature CSV")->required();
        sub->add_option("--model", model, "encode the features with this model first");
        sub->add_option("--out", out, "write instance_id,cluster CSV here");
        return sub;
    }

    int run(const CLI::App* sub) {
        const RunConfig cfg = flags.resolve(sub);
        const FeatureTable table = load_features(features);
        std::optional<EncoderState> enc;
        if (!model.empty()) enc = load_model(model);
        std::vector<Vector> feats;
        for (const FeatureRow& r : table.rows) feats.push_back(enc ? encode(*enc, r.features) : r.features);
        const PseudoLabeling lab = dbscan(feats, cfg.train.dbscan);

        json report{{"samples", feats.size()},
                    {"num_clusters", lab.num_clusters},
                    {"outliers", lab.outlier_count()},
                    {"eps", cfg.train.dbscan.eps},
                    {"min_pts", cfg.train.dbscan.min_pts}};
        const bool labeled = !table.rows.empty() && std::all_of(table.rows.begin(), table.rows.end(),
                                                                [](const FeatureRow& r) { return r.label.has_value(); });
        if (labeled) {
            std::vector<int> truth;
            for (const FeatureRow& r : table.rows) truth.push_back(*r.label);
            report["nmi"] = nmi(lab.assignment, truth);
            report["bcubed_f"] = bcubed_f(lab.assignment, truth);
        }
        if (!out.empty()) {
            std::string csv = "instance_id,cluster\n";
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                csv += std::to_string(table.rows[i].instance_id) + "," + std::to_string(lab.assignment[i]) + "\n";
            }
            write_text(out, csv);
        }
        std::cout << report.dump() << "\n";
        return 0;
    }
};

struct GradcheckCommand {
    int seeds = 20;
    bool inject_fault = false;

    CLI::App* attach(CLI::App& app) {
        CLI::App* sub = app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient");
        sub->add_option("--seeds", seeds, "seeded repetitions")->check(CLI::PositiveNumber);
        sub->add_flag("--inject-fault", inject_fault)->group("");
        return sub;
    }

    int run() {
        GradCheckSuiteOptions opt;
        opt.seeds = seeds;
        opt.inject_sign_flip = inject_fault;
        const GradCheckSuiteReport report = run_gradcheck_suite(opt);
        std::map<std::string, double> worst;
        for (const GradCheckCase& c : report.cases) worst[c.name] = std::max(worst[c.name], c.max_rel_error);
        for (const auto& [name, err] : worst) {
            std::printf("%-26s max rel err %.3e  %s\n", name.c_str(), err, err < opt.tolerance ? "ok" : "FAIL");
        }
        std::printf("%d seeds, %zu checks, worst %.3e: %s\n", seeds, report.cases.size(), report.worst,
                    report.passed ? "passed" : "FAILED");
        return report.passed ? 0 : kExitRuntime;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised domain adaptation with cluster-wise contrastive learning"};
    app.set_version_flag("--version", UDA_VERSION);
    app.require_subcommand(1);

    GenerateCommand generate_cmd;
    TrainCommand train_cmd;
    TrainCommand baseline_cmd;
    AblateCommand ablate_cmd;
    EvalCommand eval_cmd;
    ClusterCommand cluster_cmd;
    GradcheckCommand gradcheck_cmd;

    CLI::App* generate_sub = generate_cmd.attach(app);
    CLI::App* train_sub = train_cmd.attach(app, "train", "train the full method", false);
    CLI::App* baseline_sub = baseline_cmd.attach(app, "baseline", "train the two-stage baseline", true);
    CLI::App* ablate_sub = ablate_cmd.attach(app);
    CLI::App* eval_sub = eval_cmd.attach(app);
    CLI::App* cluster_sub = cluster_cmd.attach(app);
    CLI::App* gradcheck_sub = gradcheck_cmd.attach(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*generate_sub) return generate_cmd.run(generate_sub);
        if (*train_sub) return train_cmd.run(train_sub);
        if (*baseline_sub) return baseline_cmd.run(baseline_sub);
        if (*ablate_sub) return ablate_cmd.run(ablate_sub);
        if (*eval_sub) return eval_cmd.run();
        if (*cluster_sub) return cluster_cmd.run(cluster_sub);
        if (*gradcheck_sub) return gradcheck_cmd.run();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const uda::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
