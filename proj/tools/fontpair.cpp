// fontpair: command-line front end for the font pairing library.

#include "fontpair/baselines.hpp"
#include "fontpair/dataset.hpp"
#include "fontpair/engine.hpp"
#include "fontpair/evaluation.hpp"
#include "fontpair/metric_learning.hpp"
#include "fontpair/pair_extraction.hpp"
#include "fontpair/service.hpp"
#include "fontpair/similarity.hpp"
#include "fontpair/study_analytics.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using namespace fontpair;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return in;
}

// Inputs shared by the verbs that need an engine: either a snapshot or the
// raw files it would be built from.
struct EngineInputs {
    std::string snapshot;
    std::string features;
    std::string follower_features;
    std::string train;
    std::string role = "header_body";
    std::vector<std::string> models;
    DsknnParams dsknn;
    double consim_target = 0.5;
    std::uint64_t family_seed = 0;

    void add_options(CLI::App* app, bool with_snapshot) {
        if (with_snapshot) app->add_option("--snapshot", snapshot, "Engine snapshot file");
        app->add_option("--features", features, "Feature file (headers, and followers unless overridden)");
        app->add_option("--follower-features", follower_features, "Separate feature file for follower fonts");
        app->add_option("--train,--pairs", train, "Training pair file");
        app->add_option("--role", role, "Pair role: header_body or header_subheader");
        app->add_option("--model", models, "Trained model file (repeatable)");
        app->add_option("--k1", dsknn.k1, "DS-kNN header neighbours");
        app->add_option("--k2", dsknn.k2, "DS-kNN candidate neighbours");
        app->add_flag("--idf", dsknn.use_idf, "Weight DS-kNN terms by idf");
        app->add_option("--consim-target", consim_target, "Contrast target of the stand-in ConSim hook");
        app->add_option("--family-seed", family_seed, "Seed of the same-family sampler");
    }

    EngineSnapshot build() const {
        if (!snapshot.empty()) {
            EngineSnapshot s = load_snapshot_file(snapshot);
            return s;
        }
        if (features.empty()) throw InvalidArgumentError("need --snapshot or --features");
        EngineSnapshot s;
        s.headers = load_features_file(features);
        s.followers = follower_features.empty() ? s.headers : load_features_file(follower_features);
        if (!train.empty()) s.train = load_pairs_file(train, parse_pair_role(role));
        for (const auto& path : models) {
            MetricModel m = load_model_file(path);
            s.models[m.variant] = std::move(m);
        }
        s.dsknn = dsknn;
        s.consim_target = consim_target;
        s.family_seed = family_seed;
        return s;
    }
};

void print_ranking(const Ranking& r) {
    for (size_t i = 0; i < r.size(); ++i) std::cout << i + 1 << '\t' << r[i].font_id << '\t' << format_double(r[i].score) << '\n';
}

// ------------------------------------------------------------------ verbs

int run_extract(const std::string& pages, const std::string& out_body, const std::string& out_sub,
                const ExtractionConfig& cfg) {
    auto in = open_in(pages);
    ExtractionResult res = extract_pairs(in, cfg);
    {
        auto out = open_out(out_body);
        save_pairs(out, res.header_body);
    }
    if (!out_sub.empty()) {
        auto out = open_out(out_sub);
        save_pairs(out, res.header_subheader);
    }
    const auto& d = res.diagnostics;
    for (const auto& m : d.messages) std::cerr << m << '\n';
    std::cerr << "documents=" << d.documents << " pages=" << d.pages << " pages_skipped=" << d.pages_skipped
              << " malformed_records=" << d.malformed_records << " body_pairs=" << res.header_body.total_count()
              << " subheader_pairs=" << res.header_subheader.total_count() << '\n';
    return 0;
}

struct TrainOptions {
    std::string method = "asml";
    std::string pairs;
    std::string labeled;
    std::string features;
    std::string out;
    double gamma = 1.0;
    std::vector<double> gamma_grid;
    size_t folds = 5;
    TrainConfig cfg;
    bool constant_lr = false;
};

int run_train(TrainOptions o) {
    MetricVariant variant = parse_metric_variant(o.method);
    if (o.constant_lr) o.cfg.schedule = LearningRateSchedule::constant;
    FeatureStore store = load_features_file(o.features);
    std::vector<LabeledPair> labeled;
    if (!o.labeled.empty()) {
        labeled = load_labeled_file(o.labeled);
    } else {
        if (o.pairs.empty()) throw InvalidArgumentError("need --pairs or --labeled");
        labeled = sample_negatives(load_pairs_file(o.pairs).restrict_to(store), o.cfg.seed);
    }
    if (!o.gamma_grid.empty()) {
        if (variant == MetricVariant::ml) throw InvalidArgumentError("--gamma-grid applies to asml and sml only");
        auto sel = select_gamma(labeled, store, variant == MetricVariant::sml, o.cfg, o.gamma_grid, o.folds, o.cfg.seed);
        for (size_t i = 0; i < o.gamma_grid.size(); ++i)
            std::cout << "gamma_cv " << format_double(o.gamma_grid[i]) << " accuracy=" << format_double(sel.cv_accuracy[i])
                      << '\n';
        o.gamma = sel.gamma;
    }
    TrainLog log;
    MetricModel model = variant == MetricVariant::ml
                            ? train_ml(labeled, store, o.cfg, &log)
                            : train_asml(labeled, store, o.cfg, o.gamma, variant == MetricVariant::sml, &log);

    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : labeled) {
        scores.push_back(score(model, store.at(p.header_id), store.at(p.follower_id)));
        labels.push_back(p.label);
    }
    ThresholdFit fit = select_threshold(scores, labels, o.folds, o.cfg.seed);
    model.threshold = fit.threshold;
    save_model_file(o.out, model);

    std::cout << "method=" << to_string(variant) << "\npairs=" << labeled.size() << "\ndim=" << model.dim()
              << "\ngamma=" << format_double(model.gamma)
              << "\ninitial_objective=" << format_double(log.initial_objective)
              << "\nfinal_objective=" << format_double(log.final_objective)
              << "\nthreshold=" << format_double(model.threshold) << "\ncv_accuracy=" << format_double(fit.cv_accuracy)
              << '\n';
    return 0;
}

struct EvaluateOptions {
    std::string method;
    std::string task = "topn";
    std::string test;
    std::string comparisons;
    std::string report;
    std::string plot;
    std::vector<size_t> ns = {1, 2, 3, 5, 10, 20};
    double min_consistency = 0.0;
    EvalConfig cfg;
};

int run_evaluate(const EngineInputs& inputs, const EvaluateOptions& o) {
    EngineSnapshot snap = inputs.build();
    PairDataset train = snap.train;
    Engine engine(std::move(snap));
    const auto& avail = engine.available_methods();
    if (std::find(avail.begin(), avail.end(), o.method) == avail.end())
        throw InvalidArgumentError("method '" + o.method + "' is unknown or unavailable with these inputs");

    std::ostringstream rep;
    rep << "method=" << o.method << "\ntask=" << o.task << '\n';
    if (o.task == "topn") {
        if (o.test.empty()) throw InvalidArgumentError("topn needs --test");
        PairDataset test = load_pairs_file(o.test, train.role());
        Recommender rec = [&](const std::string& id, const Vector&, size_t n) { return engine.recommend(id, o.method, n); };
        TopNEvaluation ev = evaluate_topn(rec, test, train, engine.snapshot().headers, o.ns, o.cfg);
        rep << "non_popular=" << (o.cfg.non_popular_filter ? 1 : 0) << "\nheaders_evaluated=" << ev.headers_evaluated
            << "\nheaders_skipped=" << ev.headers_skipped << '\n';
        std::ofstream plot;
        if (!o.plot.empty()) {
            plot = open_out(o.plot);
            plot << "n,precision,recall,weighted_precision,weighted_recall\n";
        }
        for (const auto& r : ev.per_n) {
            rep << "precision@" << r.n << '=' << format_double(r.precision) << '\n'
                << "recall@" << r.n << '=' << format_double(r.recall) << '\n'
                << "weighted_precision@" << r.n << '=' << format_double(r.weighted_precision) << '\n'
                << "weighted_recall@" << r.n << '=' << format_double(r.weighted_recall) << '\n';
            if (plot.is_open())
                plot << r.n << ',' << format_double(r.precision) << ',' << format_double(r.recall) << ','
                     << format_double(r.weighted_precision) << ',' << format_double(r.weighted_recall) << '\n';
        }
    } else if (o.task == "binary") {
        if (o.test.empty()) throw InvalidArgumentError("binary needs --test");
        PairScorer scorer = [&](const std::string& h, const std::string& f) { return engine.score(h, f, o.method); };
        PairDataset test = load_pairs_file(o.test, train.role());
        const auto& snap_ref = engine.snapshot();
        auto train_l = sample_negatives(train.restrict_to(snap_ref.followers).filter([&](const PairRecord& r) {
            return snap_ref.headers.contains(r.header_id);
        }), o.cfg.seed);
        auto test_l = sample_negatives(test.filter([&](const PairRecord& r) {
            return snap_ref.headers.contains(r.header_id) && snap_ref.followers.contains(r.follower_id);
        }), o.cfg.seed + 1);
        BinaryResult br = binary_eval(scorer, train_l, test_l, o.cfg);
        rep << "accuracy=" << format_double(br.accuracy) << "\nthreshold=" << format_double(br.threshold)
            << "\ncv_accuracy=" << format_double(br.cv_accuracy) << "\ntest_pairs=" << br.test_size << '\n';
    } else if (o.task == "rating") {
        if (o.comparisons.empty()) throw InvalidArgumentError("rating needs --comparisons");
        auto in = open_in(o.comparisons);
        auto items = load_rating_comparisons(in, o.min_consistency);
        PairScorer scorer = [&](const std::string& h, const std::string& f) { return engine.score(h, f, o.method); };
        rep << "items=" << items.size() << "\naccuracy="
            << format_double(rating_prediction(scorer, Polarity::higher_is_better, items)) << '\n';
    } else {
        throw InvalidArgumentError("unknown task '" + o.task + "' (topn, binary, rating)");
    }

    if (o.report.empty()) {
        std::cout << rep.str();
    } else {
        auto out = open_out(o.report);
        out << rep.str();
    }
    return 0;
}

int run_analyze(const std::string& path, size_t bins, std::optional<long long> raters, const std::string& bt_out) {
    auto records = load_comparisons_file(path);
    ConsistencyReport rep = consistency_report(records, raters, bins);
    const auto& h = rep.histogram;
    std::cout << "records=" << records.size() << '\n';
    std::cout << "bin,lower,upper,observed,expected\n";
    for (size_t j = 0; j < h.observed.size(); ++j)
        std::cout << j << ',' << format_double(h.bin_edges[j]) << ',' << format_double(h.bin_edges[j + 1]) << ','
                  << format_double(h.observed[j]) << ',' << format_double(h.expected[j]) << '\n';
    std::cout << "chi2_all_bins=" << format_double(rep.all_bins.statistic) << " bins_used=" << rep.all_bins.bins_used
              << " dof=" << rep.all_bins.degrees_of_freedom() << '\n';
    if (rep.omit_sparse)
        std::cout << "chi2_omit_sparse=" << format_double(rep.omit_sparse->statistic)
                  << " bins_used=" << rep.omit_sparse->bins_used << " dof=" << rep.omit_sparse->degrees_of_freedom() << '\n';
    else
        std::cout << "chi2_omit_sparse=NA (no bin has expected count >= 5)\n";
    if (bins == 6)
        std::cout << "critical_0.005_6bins=" << format_double(kChiSquaredCritical005SixBins)
                  << "\ncritical_0.005_5bins=" << format_double(kChiSquaredCritical005FiveBins) << '\n';

    MethodWins mw = method_wins(records);
    if (mw.methods.size() < 2) return 0;
    BradleyTerryResult bt = bradley_terry_fit(mw.wins);
    for (size_t i : bt.zero_win_items)
        std::cerr << "warning: method '" << mw.methods[i] << "' never won; its strength tends to 0\n";
    std::ostringstream csv;
    csv << "method,strength\n";
    std::vector<size_t> order(mw.methods.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return bt.strengths[a] > bt.strengths[b]; });
    for (size_t i : order) csv << mw.methods[i] << ',' << format_double(bt.strengths[i]) << '\n';
    if (bt_out.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_out(bt_out);
        out << csv.str();
    }
    return 0;
}

QueryService* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

int run_serve(const EngineInputs& inputs, const std::string& host, int port, const std::string& log) {
    auto engine = std::make_shared<const Engine>(inputs.build());
    QueryService service(engine, log);
    int bound = service.bind(host, port);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ':' << bound << std::endl;
    service.listen();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Font pairing recommendation toolkit"};
    app.require_subcommand(1);

    // extract-pairs
    auto* extract = app.add_subcommand("extract-pairs", "Detect header/body and header/sub-header pairs in page records");
    std::string pages, out_body, out_sub;
    ExtractionConfig ecfg;
    bool vertical = false;
    extract->add_option("--pages", pages, "Page record file")->required();
    extract->add_option("--out-body", out_body, "Output header/body pair file")->required();
    extract->add_option("--out-subheader", out_sub, "Output header/sub-header pair file");
    extract->add_option("--dist-threshold", ecfg.subheader_distance_threshold, "Sub-header distance threshold");
    extract->add_option("--min-chars", ecfg.body_min_chars, "Minimum characters of a body box");
    extract->add_option("--min-boxes", ecfg.min_boxes_per_page, "Skip pages with fewer boxes");
    extract->add_flag("--vertical", vertical, "Measure sub-header distance vertically only");

    // split
    auto* split_cmd = app.add_subcommand("split", "Split a pair file by header");
    std::string split_in, split_train, split_test, split_role = "header_body";
    double ratio = 0.9;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--pairs", split_in)->required();
    split_cmd->add_option("--ratio", ratio, "Fraction of headers in the training split");
    split_cmd->add_option("--seed", split_seed);
    split_cmd->add_option("--role", split_role);
    split_cmd->add_option("--out-train", split_train)->required();
    split_cmd->add_option("--out-test", split_test)->required();

    // sample-negatives
    auto* neg = app.add_subcommand("sample-negatives", "Write positives plus an equal number of sampled negatives");
    std::string neg_in, neg_out;
    std::uint64_t neg_seed = 0;
    neg->add_option("--pairs", neg_in)->required();
    neg->add_option("--seed", neg_seed);
    neg->add_option("--out", neg_out)->required();

    // train
    auto* train = app.add_subcommand("train", "Train an ml, sml or asml scoring model");
    TrainOptions topt;
    train->add_option("--method", topt.method)->check(CLI::IsMember({"ml", "sml", "asml"}));
    train->add_option("--pairs", topt.pairs, "Positive pair file; negatives are sampled");
    train->add_option("--labeled", topt.labeled, "Labeled pair file (overrides --pairs)");
    train->add_option("--features", topt.features)->required();
    train->add_option("--out", topt.out)->required();
    train->add_option("--gamma", topt.gamma);
    train->add_option("--gamma-grid", topt.gamma_grid, "Choose gamma among these by cross-validation")
        ->delimiter(',')
        ->excludes("--gamma");
    train->add_option("--epochs", topt.cfg.epochs);
    train->add_option("--lr", topt.cfg.learning_rate);
    train->add_flag("--constant-lr", topt.constant_lr, "Disable the 1/sqrt(epoch) decay");
    train->add_option("--batch", topt.cfg.batch_size, "Mini-batch size, 0 for full batch");
    train->add_option("--seed", topt.cfg.seed);
    train->add_flag("--psd", topt.cfg.psd_projection, "Project M onto the PSD cone each epoch");
    train->add_flag("!--no-multiplicity", topt.cfg.multiplicity_weighting, "Weight every positive once");
    train->add_option("--projection-dim", topt.cfg.projection_dim, "PCA dimension before training (0 = off)");
    train->add_option("--folds", topt.folds, "Folds for threshold cross-validation");

    // recommend
    auto* recommend = app.add_subcommand("recommend", "Recommend followers for a header font");
    EngineInputs rin;
    std::string rmethod = "dsknn", rheader;
    size_t rn = 10;
    rin.add_options(recommend, true);
    recommend->add_option("--method", rmethod);
    recommend->add_option("--header", rheader)->required();
    recommend->add_option("--n", rn);

    // similar
    auto* similar = app.add_subcommand("similar", "Fonts most similar to a font by feature cosine");
    std::string sfeatures, sfont;
    size_t sk = 5;
    similar->add_option("--features", sfeatures)->required();
    similar->add_option("--font", sfont)->required();
    similar->add_option("--k", sk);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Top-N, binary or rating-prediction evaluation");
    EngineInputs ein;
    EvaluateOptions eopt;
    ein.add_options(evaluate, false);
    evaluate->add_option("--method", eopt.method)->required();
    evaluate->add_option("--task", eopt.task)->check(CLI::IsMember({"topn", "binary", "rating"}));
    evaluate->add_option("--test", eopt.test);
    evaluate->add_option("--comparisons", eopt.comparisons, "Rating comparisons for --task rating");
    evaluate->add_option("--min-consistency", eopt.min_consistency);
    evaluate->add_option("--ns", eopt.ns, "List lengths for top-N")->delimiter(',');
    evaluate->add_flag("--non-popular", eopt.cfg.non_popular_filter, "Drop the most popular followers from ground truth");
    evaluate->add_option("--popular-top-k", eopt.cfg.popular_top_k);
    evaluate->add_option("--folds", eopt.cfg.folds);
    evaluate->add_option("--seed", eopt.cfg.seed);
    evaluate->add_option("--report", eopt.report, "Write key=value report here instead of stdout");
    evaluate->add_option("--plot", eopt.plot, "Write per-N CSV here");

    // analyze-study
    auto* analyze = app.add_subcommand("analyze-study", "Consistency histogram, chi-squared and Bradley-Terry");
    std::string cpath, bt_out;
    size_t bins = 6;
    long long raters = 0;
    analyze->add_option("--comparisons", cpath)->required();
    analyze->add_option("--bins", bins);
    analyze->add_option("--raters", raters, "Raters per comparison (default: each record's own total)");
    analyze->add_option("--bt-out", bt_out, "Write the Bradley-Terry CSV here");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the HTTP query interface");
    EngineInputs sin;
    std::string host = "127.0.0.1", log_path = "comparisons.tsv";
    int port = 8080;
    sin.add_options(serve, true);
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--log", log_path, "Comparison log file");

    // snapshot
    auto* snapshot = app.add_subcommand("snapshot", "Bundle features, pairs and models into a snapshot file");
    EngineInputs snin;
    std::string snap_out, snap_version = "1", snap_check;
    snin.add_options(snapshot, false);
    snapshot->add_option("--out", snap_out);
    snapshot->add_option("--label", snap_version, "Free-form build label stored in the snapshot");
    snapshot->add_option("--check", snap_check, "Validate an existing snapshot and print a summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            ecfg.distance_mode = vertical ? DistanceMode::vertical : DistanceMode::euclidean;
            return run_extract(pages, out_body, out_sub, ecfg);
        }
        if (*split_cmd) {
            auto parts = split_by_header(load_pairs_file(split_in, parse_pair_role(split_role)), ratio, split_seed);
            auto a = open_out(split_train);
            save_pairs(a, parts.train);
            auto b = open_out(split_test);
            save_pairs(b, parts.test);
            std::cerr << "train_headers=" << parts.train.num_headers() << " test_headers=" << parts.test.num_headers()
                      << '\n';
            return 0;
        }
        if (*neg) {
            auto labeled = sample_negatives(load_pairs_file(neg_in), neg_seed);
            auto out = open_out(neg_out);
            save_labeled(out, labeled);
            return 0;
        }
        if (*train) return run_train(topt);
        if (*recommend) {
            Engine engine(rin.build());
            print_ranking(engine.recommend(rheader, rmethod, rn));
            return 0;
        }
        if (*similar) {
            FeatureStore store = load_features_file(sfeatures);
            for (const auto& nb : knn(store.at(sfont), store, sk, {sfont}))
                std::cout << nb.font_id << '\t' << format_double(nb.score) << '\n';
            return 0;
        }
        if (*evaluate) return run_evaluate(ein, eopt);
        if (*analyze) return run_analyze(cpath, bins, raters > 0 ? std::optional<long long>(raters) : std::nullopt, bt_out);
        if (*serve) return run_serve(sin, host, port, log_path);
        if (*snapshot) {
            if (!snap_check.empty()) {
                EngineSnapshot s = load_snapshot_file(snap_check);
                Engine e(s);
                std::cout << "label=" << s.version << "\nheaders=" << s.headers.size() << "\nfollowers="
                          << s.followers.size() << "\npairs=" << s.train.total_count() << "\nmethods=";
                const auto methods = e.available_methods();
                for (size_t i = 0; i < methods.size(); ++i) std::cout << (i ? "," : "") << methods[i];
                std::cout << '\n';
                return 0;
            }
            if (snap_out.empty()) throw InvalidArgumentError("snapshot needs --out or --check");
            EngineSnapshot s = snin.build();
            s.version = snap_version;
            save_snapshot_file(snap_out, s);
            return 0;
        }
    } catch (const NotFoundError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
