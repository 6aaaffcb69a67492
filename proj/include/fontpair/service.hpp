#pragma once

#include "fontpair/engine.hpp"

#include <memory>
#include <string>

namespace fontpair {

/// Read-only HTTP front end over an Engine, plus an append-only comparison
/// log in the `analyze-study` input format.
///
///   GET  /fonts?role=header|follower
///   GET  /recommend?header=ID&method=M&n=N
///   GET  /score?header=ID&follower=ID&method=M
///   POST /comparisons  {header, follower_a, follower_b, choice: "a"|"b",
///                       method_a?, method_b?}
class QueryService {
public:
    QueryService(std::shared_ptr<const Engine> engine, std::string comparison_log);
    ~QueryService();
    QueryService(const QueryService&) = delete;
    QueryService& operator=(const QueryService&) = delete;

    /// Publishes a new engine; in-flight requests finish on the old one.
    void swap_engine(std::shared_ptr<const Engine> engine);
    std::shared_ptr<const Engine> engine() const;

    /// Binds (port 0 picks a free port) and returns the bound port. Throws on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();
    /// Blocks until the server accepts connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fontpair
