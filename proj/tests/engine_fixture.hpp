#pragma once

// A small but complete engine snapshot: every method answerable. Built with
// the library's own trainers; tests using it check plumbing, not learning.

#include "support.hpp"

#include "fontpair/engine.hpp"

namespace fixtures {

inline fontpair::EngineSnapshot small_snapshot(std::uint64_t seed = 11, size_t dim = 8) {
    using namespace fontpair;
    std::mt19937_64 rng(seed);
    EngineSnapshot s;
    s.version = "fixture-" + std::to_string(seed);
    FeatureStore both;
    for (int k = 0; k < 25; ++k) {
        Vector v = gaussian_vector(rng, dim);
        s.headers.insert("Fam" + std::to_string(k) + "-Bold", v);
        both.insert("Fam" + std::to_string(k) + "-Bold", v);
    }
    for (int k = 0; k < 20; ++k)
        for (const char* style : {"-Regular", "-Italic"}) {
            Vector v = gaussian_vector(rng, dim);
            s.followers.insert("Fam" + std::to_string(k) + style, v);
            both.insert("Fam" + std::to_string(k) + style, v);
        }
    s.train = random_pairs(rng, s.headers, s.followers, 120);
    s.dsknn = {};
    s.dsknn.k1 = 5;
    s.dsknn.k2 = 3;
    s.dsknn.use_idf = true;
    s.family_seed = seed;

    auto labeled = sample_negatives(s.train, seed);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.01;
    cfg.seed = seed;
    s.models[MetricVariant::asml] = train_asml(labeled, both, cfg, 1.0, false);
    s.models[MetricVariant::sml] = train_asml(labeled, both, cfg, 1.0, true);
    s.models[MetricVariant::ml] = train_ml(labeled, both, cfg);
    s.models[MetricVariant::asml].threshold = 0.25;
    return s;
}

}  // namespace fixtures
