#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dscf/config.hpp"
#include "dscf/data.hpp"
#include "dscf/features.hpp"
#include "dscf/graph.hpp"
#include "dscf/io.hpp"
#include "dscf/neumf.hpp"
#include "dscf/nn/checkpoint.hpp"
#include "dscf/pipeline.hpp"
#include "dscf/pmf.hpp"
#include "dscf/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dscf;

namespace {

using Real = float;

/// Artifact layout inside the output directory.
struct Artifacts {
    fs::path dir;
    fs::path dataset() const { return dir / "dataset.tsv"; }
    fs::path trust() const { return dir / "trust.tsv"; }
    fs::path manifest() const { return dir / "split_manifest.tsv"; }
    fs::path features() const { return dir / "item_features.bin"; }
    fs::path sequences() const { return dir / "sequences.bin"; }
    fs::path checkpoint(const std::string& variant) const { return dir / ("model_" + variant + ".ckpt"); }
    fs::path metrics() const { return dir / "metrics.jsonl"; }
    fs::path summary() const { return dir / "summary.json"; }
};

void require(const fs::path& p, const char* producer) {
    if (!fs::exists(p))
        throw std::runtime_error("missing " + p.string() + " (produced by `dscf " + producer + "`)");
}

void log(const std::string& msg) { std::clog << "[dscf] " << msg << '\n'; }

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

class MetricsLog {
public:
    explicit MetricsLog(const fs::path& p) : os_(p, std::ios::app) {
        if (!os_) throw std::runtime_error("cannot open for writing: " + p.string());
    }
    void write(const json& j) { os_ << j.dump() << '\n' << std::flush; }

private:
    std::ofstream os_;
};

json metric_record(const std::string& command, const std::string& model, const MetricReport& r) {
    return {{"command", command}, {"model", model},   {"epoch", r.epoch},
            {"split", to_string(r.split)}, {"mae", r.mae}, {"rmse", r.rmse}};
}

void update_summary(const Artifacts& a, const std::string& command, const json& body) {
    json s = json::object();
    if (fs::exists(a.summary())) {
        std::ifstream is(a.summary());
        s = json::parse(is, nullptr, false);
        if (s.is_discarded() || !s.is_object()) s = json::object();
    }
    s[command] = body;
    auto os = io::open_out(a.summary().string(), false);
    os << s.dump(2) << '\n';
}

RatingDataset load_dataset(const Artifacts& a) {
    require(a.dataset(), "prepare");
    auto is = io::open_in(a.dataset().string(), false);
    return read_prepared(is, a.dataset().string());
}

SocialGraph load_graph(const Artifacts& a, const RatingDataset& ds, bool directed) {
    require(a.trust(), "prepare");
    const auto t = load_trust(a.trust().string(), IdMap::identity(ds.n_users()));
    return build_graph(t.edges, ds.n_users(), directed);
}

ItemFeatureTable load_features(const Artifacts& a, const RatingDataset& ds) {
    require(a.features(), "pretrain");
    auto is = io::open_in(a.features().string());
    auto f = ItemFeatureTable::load(is);
    if (f.n_items() != ds.n_items())
        throw std::runtime_error(a.features().string() + " covers " + std::to_string(f.n_items()) +
                                 " items but the dataset has " + std::to_string(ds.n_items()) + " (rerun `dscf pretrain`)");
    return f;
}

SequenceSet load_sequences(const Artifacts& a, const RatingDataset& ds, const TrainConfig& cfg) {
    require(a.sequences(), "walks");
    auto is = io::open_in(a.sequences().string());
    auto s = SequenceSet::load(is);
    if (s.dataset_hash() != ds.hash())
        throw std::runtime_error(a.sequences().string() + " was built for a different dataset (rerun `dscf walks`)");
    if (s.length() != cfg.walk_length || s.count() != cfg.num_walks)
        throw std::runtime_error(a.sequences().string() + " holds l=" + std::to_string(s.length()) +
                                 ", H=" + std::to_string(s.count()) + " but the config asks for l=" +
                                 std::to_string(cfg.walk_length) + ", H=" + std::to_string(cfg.num_walks) +
                                 " (rerun `dscf walks`)");
    return s;
}

ModelOptions model_options(const RunConfig& c) { return {3, c.mask_padding}; }

NeuMfConfig neumf_config(const RunConfig& c) {
    NeuMfConfig n;
    n.factors = c.neumf_factors;
    n.max_epochs = c.neumf_epochs;
    n.batch_size = c.train.batch_size;
    n.learning_rate = c.train.learning_rate;
    n.patience = c.train.patience;
    n.seed = c.train.seed;
    return n;
}

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t v = 0;
        const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size() || tok.empty())
            throw ConfigError(std::string("bad ") + what + " list '" + s + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
    return out;
}

// --- commands -------------------------------------------------------------

void cmd_synthetic(const RunConfig& c, const Artifacts& a, std::size_t users, std::size_t items) {
    SyntheticConfig sc;
    sc.n_users = users;
    sc.n_items = items;
    sc.seed = c.train.seed;
    const auto syn = make_synthetic(sc);
    auto rs = io::open_out((a.dir / "ratings.tsv").string(), false);
    for (const auto& t : syn.triples) rs << 'u' << t.user << "\ti" << t.item << '\t' << t.rating << '\n';
    auto ts = io::open_out((a.dir / "trust.raw.tsv").string(), false);
    for (const auto& e : syn.edges) ts << 'u' << e.source << "\tu" << e.target << '\n';
    log("wrote " + std::to_string(syn.triples.size()) + " ratings and " + std::to_string(syn.edges.size()) +
        " trust edges to " + a.dir.string());
    update_summary(a, "synthetic",
                   {{"users", users}, {"items", items}, {"ratings", syn.triples.size()}, {"edges", syn.edges.size()}});
}

void cmd_prepare(const RunConfig& c, const Artifacts& a) {
    if (c.ratings.empty() || c.trust.empty()) throw ConfigError("prepare needs --ratings and --trust");
    const auto fmt = parse_ingest_format(c.format);
    const auto r = load_ratings(c.ratings, fmt, c.levels);
    const auto t = load_trust(c.trust, r.users, fmt);
    const auto ds = split_dataset(r, c.levels, c.split, c.train.seed);
    const auto g = build_graph(t.edges, ds.n_users(), c.directed);
    {
        auto os = io::open_out(a.dataset().string(), false);
        write_prepared(os, ds);
    }
    {
        auto os = io::open_out(a.trust().string(), false);
        write_trust_tsv(os, t.edges);
    }
    {
        auto os = io::open_out(a.manifest().string(), false);
        write_split_manifest(os, ds, r.users, r.items);
    }
    const auto st = g.stats();
    json body = {{"dataset", c.dataset},
                 {"users", ds.n_users()},
                 {"items", ds.n_items()},
                 {"ratings", ds.size()},
                 {"duplicates_replaced", r.duplicates_replaced},
                 {"trust_records", t.records},
                 {"trust_edges", t.edges.size()},
                 {"trust_dropped_unknown", t.dropped_unknown},
                 {"trust_dropped_self_loops", t.dropped_self_loops},
                 {"trust_dropped_duplicates", t.dropped_duplicates},
                 {"degree", {{"min", st.min}, {"max", st.max}, {"mean", st.mean}, {"isolated", st.isolated}}},
                 {"split", {{"train", ds.count(Split::train)}, {"val", ds.count(Split::val)}, {"test", ds.count(Split::test)}}},
                 {"hash", ds.hash()}};
    log("prepared " + std::to_string(ds.size()) + " ratings (" + std::to_string(ds.n_users()) + " users, " +
        std::to_string(ds.n_items()) + " items), " + std::to_string(t.edges.size()) + " trust edges");
    update_summary(a, "prepare", body);
}

void pretrain_pmf_features(const RunConfig& c, const Artifacts& a, const RatingDataset& ds) {
    PmfConfig pc;
    pc.rank = 2 * c.neumf_factors;
    pc.seed = c.train.seed;
    pc.patience = c.train.patience;
    const auto r = train_pmf_baseline(ds, pc);
    {
        auto os = io::open_out(a.features().string());
        r.model.item_features(ds.n_items()).save(os);
    }
    json body = {{"model", "pmf"}, {"rank", pc.rank}};
    if (r.test) body["test"] = {{"mae", r.test->mae}, {"rmse", r.test->rmse}};
    update_summary(a, "pretrain", body);
}

void cmd_pretrain(const RunConfig& c, const Artifacts& a) {
    const auto ds = load_dataset(a);
    if (c.features == "pmf") return pretrain_pmf_features(c, a, ds);
    MetricsLog m(a.metrics());
    const auto r = pretrain_neumf(ds, neumf_config(c), [&](const EpochRecord& e) {
        json j = {{"command", "pretrain"}, {"model", "neumf"}, {"epoch", e.epoch}, {"split", "train"},
                  {"train_loss", e.train_loss}};
        m.write(j);
        if (e.val) m.write(metric_record("pretrain", "neumf", *e.val));
    });
    {
        auto os = io::open_out(a.features().string());
        r.features.save(os);
    }
    json body = {{"model", "neumf"}, {"best_epoch", r.training.best_epoch}, {"epochs", r.training.history.size()}};
    if (r.val) body["val"] = {{"mae", r.val->mae}, {"rmse", r.val->rmse}};
    if (r.test) {
        body["test"] = {{"mae", r.test->mae}, {"rmse", r.test->rmse}};
        m.write(metric_record("pretrain", "neumf", *r.test));
        log("neumf test " + fmt("MAE %.4f RMSE %.4f", r.test->mae, r.test->rmse));
    }
    update_summary(a, "pretrain", body);
}

void cmd_baseline(const RunConfig& c, const Artifacts& a) {
    const auto ds = load_dataset(a);
    PmfConfig base;
    base.seed = c.train.seed;
    base.patience = c.train.patience;
    const std::size_t ranks[] = {5, 10, 20};
    const double regs[] = {0.01, 0.05, 0.1, 0.5};
    const auto r = tune_pmf(ds, base, ranks, regs);
    MetricsLog m(a.metrics());
    json body = {{"model", "pmf"},
                 {"rank", r.model.config().rank},
                 {"regularization", r.model.config().regularization},
                 {"epochs", r.epochs}};
    if (r.val) {
        m.write(metric_record("baseline", "pmf", *r.val));
        body["val"] = {{"mae", r.val->mae}, {"rmse", r.val->rmse}};
    }
    if (r.test) {
        m.write(metric_record("baseline", "pmf", *r.test));
        body["test"] = {{"mae", r.test->mae}, {"rmse", r.test->rmse}};
        log("pmf test " + fmt("MAE %.4f RMSE %.4f", r.test->mae, r.test->rmse));
    }
    update_summary(a, "baseline", body);
}

void cmd_walks(const RunConfig& c, const Artifacts& a) {
    const auto ds = load_dataset(a);
    const auto g = load_graph(a, ds, c.directed);
    const auto f = load_features(a, ds);
    const auto seqs = sequences_for(ds, g, f, c.train);
    {
        auto os = io::open_out(a.sequences().string());
        seqs.save(os);
    }
    std::size_t padded = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t h = 0; h < seqs.count(); ++h) padded += seqs.padded(i, h);
    log("cached " + std::to_string(seqs.count()) + " sequences of length " + std::to_string(seqs.length()) +
        " for " + std::to_string(ds.size()) + " pairs");
    update_summary(a, "walks", {{"l", seqs.length()}, {"H", seqs.count()}, {"pairs", ds.size()},
                                {"padded_sequences", padded}});
}

void cmd_train(const RunConfig& c, const Artifacts& a) {
    const auto ds = load_dataset(a);
    const auto seqs = load_sequences(a, ds, c.train);
    const auto variant = parse_variant(c.variant);
    DscfModel<Real> model(model_config(ds, variant, c.train.d, model_options(c)), c.train.seed);
    MetricsLog m(a.metrics());
    std::function<const SequenceSet&(std::size_t)> resample;
    std::optional<SocialGraph> g;
    std::optional<ItemFeatureTable> f;
    std::optional<SequenceSet> fresh;
    if (c.resample_walks) {
        g.emplace(load_graph(a, ds, c.directed));
        f.emplace(load_features(a, ds));
        resample = [&](std::size_t epoch) -> const SequenceSet& {
            if (epoch == 1) return seqs;
            auto tc = c.train;
            tc.seed = c.train.seed + epoch - 1;
            fresh.emplace(sequences_for(ds, *g, *f, tc));
            return *fresh;
        };
    }
    const auto out = fit_and_score(model, ds, seqs, c.train, [&](const EpochRecord& e) {
        m.write({{"command", "train"}, {"model", c.variant}, {"epoch", e.epoch}, {"split", "train"},
                 {"train_loss", e.train_loss}});
        if (e.val) {
            m.write(metric_record("train", c.variant, *e.val));
            log("epoch " + std::to_string(e.epoch) + fmt(" loss %.4f val RMSE %.4f", e.train_loss, e.val->rmse));
        }
    }, resample);
    {
        auto meta = model.checkpoint_metadata();
        std::ostringstream cfg;
        write_config(cfg, c);
        meta["run_config"] = cfg.str();
        auto os = io::open_out(a.checkpoint(c.variant).string());
        nn::save_checkpoint(os, model.parameters(), meta);
    }
    auto test = out.test;
    test.epoch = out.best_epoch;
    m.write(metric_record("train", c.variant, test));
    log(c.variant + " test " + fmt("MAE %.4f RMSE %.4f", out.test.mae, out.test.rmse));
    update_summary(a, "train", json(out));
}

void cmd_evaluate(const RunConfig& c, const Artifacts& a) {
    const auto ds = load_dataset(a);
    const auto path = a.checkpoint(c.variant);
    require(path, "train");
    auto is = io::open_in(path.string());
    const auto meta = nn::read_checkpoint_metadata(is);
    const auto mc = DscfModel<Real>::config_from_metadata(meta);
    if (mc.n_users != ds.n_users() || mc.n_items != ds.n_items())
        throw std::runtime_error(path.string() + " does not match the prepared dataset (rerun `dscf train`)");
    TrainConfig tc = c.train;
    tc.d = mc.d;
    const auto seqs = load_sequences(a, ds, tc);
    DscfModel<Real> model(mc, c.train.seed);
    is.clear();
    is.seekg(0);
    nn::load_checkpoint(is, model.parameters());
    DscfNet<Real> net(model, ds, seqs);
    MetricsLog m(a.metrics());
    json body = {{"variant", c.variant}};
    for (const auto split : {Split::val, Split::test}) {
        if (ds.count(split) == 0) continue;
        const auto r = evaluate<Real>(net, ds, split);
        m.write(metric_record("evaluate", c.variant, r));
        body[std::string(to_string(split))] = {{"mae", r.mae}, {"rmse", r.rmse}};
        log(c.variant + " " + std::string(to_string(split)) + fmt(" MAE %.4f RMSE %.4f", r.mae, r.rmse));
    }
    update_summary(a, "evaluate", body);
}

void cmd_ablate(const RunConfig& c, const Artifacts& a, const std::string& seeds_arg) {
    const auto ds = load_dataset(a);
    const auto g = load_graph(a, ds, c.directed);
    const auto f = load_features(a, ds);
    const auto seeds = seeds_arg.empty() ? std::vector<std::size_t>{c.train.seed} : parse_list(seeds_arg, "seed");
    MetricsLog m(a.metrics());
    auto table = io::open_out((a.dir / "ablation.tsv").string(), false);
    table << "seed\tvariant\tval_mae\tval_rmse\ttest_mae\ttest_rmse\tbest_epoch\n";
    std::cout << "seed  variant           test_MAE  test_RMSE\n";
    json rows = json::array();
    std::size_t ordered = 0;
    for (const auto seed : seeds) {
        auto tc = c.train;
        tc.seed = seed;
        const auto seqs = sequences_for(ds, g, f, tc);
        const auto out = run_ablation<Real>(ds, seqs, tc, kAllVariants, model_options(c));
        std::map<Variant, double> rmse;
        for (const auto& o : out) {
            rmse[o.variant] = o.test.rmse;
            const auto name = std::string(to_string(o.variant));
            table << seed << '\t' << name << '\t' << o.val.mae << '\t' << o.val.rmse << '\t' << o.test.mae << '\t'
                  << o.test.rmse << '\t' << o.best_epoch << '\n';
            std::printf("%-5zu %-17s %8.4f  %9.4f\n", seed, name.c_str(), o.test.mae, o.test.rmse);
            auto rec = metric_record("ablate", name, o.test);
            rec["seed"] = seed;
            m.write(rec);
            json row = o;
            row["seed"] = seed;
            rows.push_back(row);
        }
        ordered += rmse[Variant::full] < rmse[Variant::no_opinion] &&
                   rmse[Variant::no_opinion] < rmse[Variant::no_item_opinion];
    }
    std::cout << std::flush;
    log("full < no_opinion < no_item_opinion in " + std::to_string(ordered) + "/" + std::to_string(seeds.size()) +
        " seeds");
    update_summary(a, "ablate", {{"rows", rows}, {"ordering_holds", ordered}, {"seeds", seeds.size()}});
}

void cmd_sweep(const RunConfig& c, const Artifacts& a, const std::string& param_arg, const std::string& values_arg) {
    const auto ds = load_dataset(a);
    const auto g = load_graph(a, ds, c.directed);
    const auto f = load_features(a, ds);
    const auto param = parse_sweep_param(param_arg);
    const auto values = parse_list(values_arg, "value");
    const auto variant = parse_variant(c.variant);
    const char* pname = param == SweepParam::walk_length ? "l" : "H";
    const auto rows = run_sweep<Real>(ds, g, f, c.train, param, values, variant, model_options(c));
    MetricsLog m(a.metrics());
    auto table = io::open_out((a.dir / (std::string("sweep_") + pname + ".tsv")).string(), false);
    table << pname << "\tval_mae\tval_rmse\ttest_mae\ttest_rmse\tbest_epoch\n";
    std::printf("%-4s test_MAE  test_RMSE\n", pname);
    json out = json::array();
    for (const auto& r : rows) {
        const auto& o = r.outcome;
        table << r.value << '\t' << o.val.mae << '\t' << o.val.rmse << '\t' << o.test.mae << '\t' << o.test.rmse << '\t'
              << o.best_epoch << '\n';
        std::printf("%-4zu %8.4f  %9.4f\n", r.value, o.test.mae, o.test.rmse);
        auto rec = metric_record("sweep", c.variant, o.test);
        rec[pname] = r.value;
        m.write(rec);
        json row = o;
        row[pname] = r.value;
        out.push_back(row);
    }
    std::cout << std::flush;
    update_summary(a, std::string("sweep_") + pname, {{"param", pname}, {"rows", out}});
}

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

constexpr Flag kFlags[] = {
    {"--dataset", "dataset", "dataset label"},
    {"--ratings", "ratings", "raw ratings file"},
    {"--trust", "trust", "raw trust file"},
    {"--format", "format", "input format: tsv or mat-text"},
    {"--levels", "levels", "number of rating levels"},
    {"--split", "split", "train fraction x (rest split evenly into val/test)"},
    {"--seed", "seed", "random seed"},
    {"--d", "d", "embedding size"},
    {"--batch", "batch", "minibatch size"},
    {"--lr", "lr", "Adam learning rate"},
    {"--dropout", "dropout", "dropout rate"},
    {"--walk-length", "walk_length", "sequence length l"},
    {"--num-walks", "num_walks", "sequences per pair H"},
    {"--max-epochs", "max_epochs", "epoch limit"},
    {"--patience", "patience", "successive val-RMSE increases before stopping"},
    {"--variant", "variant", "full, no_opinion, no_item_opinion, no_attention, averaging, shuffling"},
    {"--neumf-factors", "neumf_factors", "NeuMF embedding size per branch"},
    {"--neumf-epochs", "neumf_epochs", "NeuMF epoch limit"},
    {"--features", "features", "item features for pretrain: neumf or pmf"},
    {"--out", "out", "output directory"},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DSCF: social collaborative filtering over item-aware social sequences"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file");
    std::map<std::string, std::string> flag_values;
    std::vector<std::pair<const Flag*, CLI::Option*>> opts;
    for (const auto& f : kFlags) opts.emplace_back(&f, app.add_option(f.name, flag_values[f.key], f.help));
    bool mask_padding = false, directed = false;
    auto* mask_opt = app.add_flag("--mask-padding", mask_padding, "exclude padding steps from step attention");
    auto* directed_opt = app.add_flag("--directed", directed, "treat trust as directed");
    bool resample_walks = false;
    auto* resample_opt = app.add_flag("--resample-walks", resample_walks, "draw fresh walks every epoch in train");

    std::size_t syn_users = 200, syn_items = 300;
    auto* synthetic = app.add_subcommand("synthetic", "write a synthetic ratings/trust pair into --out");
    synthetic->add_option("--users", syn_users, "number of users");
    synthetic->add_option("--items", syn_items, "number of items");
    auto* prepare = app.add_subcommand("prepare", "ingest raw files, split, write the prepared dataset");
    auto* pretrain = app.add_subcommand("pretrain", "train NeuMF and write item features");
    auto* baseline = app.add_subcommand("baseline", "tune and score the PMF baseline");
    auto* walks = app.add_subcommand("walks", "build the item-aware sequence cache");
    auto* trainc = app.add_subcommand("train", "train one DSCF variant");
    auto* evaluatec = app.add_subcommand("evaluate", "score a trained checkpoint on val and test");
    std::string seeds;
    auto* ablate = app.add_subcommand("ablate", "train all six variants per seed");
    ablate->add_option("--seeds", seeds, "comma-separated seeds (default: --seed)");
    std::string sweep_param = "l", sweep_values = "1,2,4,6,8";
    auto* sweep = app.add_subcommand("sweep", "vary l or H and report one row per value");
    sweep->add_option("--param", sweep_param, "l or H");
    sweep->add_option("--values", sweep_values, "comma-separated values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "dscf: error: " << e.what() << '\n';
        return e.get_exit_code() ? e.get_exit_code() : 2;
    }

    try {
        RunConfig::Entries file, flags;
        if (!config_path.empty()) {
            auto is = io::open_in(config_path, false);
            file = read_config_entries(is, config_path);
        }
        for (const auto& [f, opt] : opts)
            if (opt->count()) flags.emplace_back(f->key, flag_values[f->key]);
        if (mask_opt->count()) flags.emplace_back("mask_padding", mask_padding ? "true" : "false");
        if (directed_opt->count()) flags.emplace_back("directed", directed ? "true" : "false");
        if (resample_opt->count()) flags.emplace_back("resample_walks", resample_walks ? "true" : "false");
        const auto cfg = resolve_config(RunConfig{}, file, flags);
        cfg.validate();

        const auto* sub = app.get_subcommands().front();
        const std::string command = sub->get_name();
        const Artifacts a{cfg.out};
        fs::create_directories(a.dir);
        std::ostringstream resolved;
        write_config(resolved, cfg);
        std::clog << "[dscf] " << command << " with resolved config:\n" << resolved.str();
        {
            auto os = io::open_out((a.dir / (command + ".cfg")).string(), false);
            os << resolved.str();
        }

        if (sub == synthetic) cmd_synthetic(cfg, a, syn_users, syn_items);
        else if (sub == prepare) cmd_prepare(cfg, a);
        else if (sub == pretrain) cmd_pretrain(cfg, a);
        else if (sub == baseline) cmd_baseline(cfg, a);
        else if (sub == walks) cmd_walks(cfg, a);
        else if (sub == trainc) cmd_train(cfg, a);
        else if (sub == evaluatec) cmd_evaluate(cfg, a);
        else if (sub == ablate) cmd_ablate(cfg, a, seeds);
        else if (sub == sweep) cmd_sweep(cfg, a, sweep_param, sweep_values);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        std::cerr << "dscf: error: " << msg << '\n';
        return 1;
    }
    return 0;
}
