#include "fontpair/service.hpp"

#include "fontpair/study_analytics.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <mutex>

namespace fontpair {

using nlohmann::json;

struct QueryService::Impl {
    std::shared_ptr<const Engine> engine;
    std::mutex log_mutex;
    std::string log_path;
    long long next_seq = 1;
    httplib::Server server;
};

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

// Maps library errors onto HTTP statuses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const InvalidArgumentError& e) {
        send_error(res, 400, e.what());
    } catch (const ParseError& e) {
        send_error(res, 400, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad JSON: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

std::string required_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) throw InvalidArgumentError(std::string("missing query parameter '") + name + "'");
    return req.get_param_value(name);
}

long long count_lines(const std::string& path) {
    std::ifstream in(path);
    long long n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) ++n;
    return n;
}

}  // namespace

QueryService::QueryService(std::shared_ptr<const Engine> engine, std::string comparison_log)
    : impl_(std::make_unique<Impl>()) {
    if (!engine) throw Error("query service needs an engine");
    impl_->engine = std::move(engine);
    impl_->log_path = std::move(comparison_log);
    impl_->next_seq = count_lines(impl_->log_path) + 1;

    Impl* self = impl_.get();
    auto& srv = impl_->server;

    srv.Get("/fonts", [self](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto engine = std::atomic_load(&self->engine);
            std::string role = required_param(req, "role");
            const FeatureStore* store = nullptr;
            if (role == "header") store = &engine->snapshot().headers;
            else if (role == "follower") store = &engine->snapshot().followers;
            else throw InvalidArgumentError("role must be 'header' or 'follower'");
            res.set_content(json(store->ids()).dump(), "application/json");
        });
    });

    srv.Get("/recommend", [self](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto engine = std::atomic_load(&self->engine);
            std::string header = required_param(req, "header");
            std::string method = required_param(req, "method");
            long long n = req.has_param("n") ? parse_int(req.get_param_value("n")) : 10;
            if (n < 1) throw InvalidArgumentError("n must be at least 1");
            json body = json::array();
            for (const auto& s : engine->recommend(header, method, static_cast<size_t>(n)))
                body.push_back({{"font_id", s.font_id}, {"score", s.score}});
            res.set_content(body.dump(), "application/json");
        });
    });

    srv.Get("/score", [self](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto engine = std::atomic_load(&self->engine);
            std::string header = required_param(req, "header");
            std::string follower = required_param(req, "follower");
            std::string method = required_param(req, "method");
            double s = engine->score(header, follower, method);
            res.set_content(json{{"header", header}, {"follower", follower}, {"method", method}, {"score", s}}.dump(),
                            "application/json");
        });
    });

    srv.Post("/comparisons", [self](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto engine = std::atomic_load(&self->engine);
            json in = json::parse(req.body);
            auto header = in.at("header").get<std::string>();
            auto a = in.at("follower_a").get<std::string>();
            auto b = in.at("follower_b").get<std::string>();
            auto choice = in.at("choice").get<std::string>();
            if (choice != "a" && choice != "b") throw InvalidArgumentError("choice must be 'a' or 'b'");
            if (!engine->snapshot().headers.contains(header)) throw NotFoundError("unknown header font '" + header + "'");
            for (const auto* f : {&a, &b})
                if (!engine->snapshot().followers.contains(*f)) throw NotFoundError("unknown follower font '" + *f + "'");

            ComparisonRecord rec;
            rec.method1 = in.value("method_a", a);
            rec.method2 = in.value("method_b", b);
            rec.hit1 = choice == "a" ? 1 : 0;
            rec.hit2 = choice == "b" ? 1 : 0;
            {
                std::lock_guard lock(self->log_mutex);
                rec.id = header + "#" + std::to_string(self->next_seq);
                std::ofstream out(self->log_path, std::ios::app);
                if (!out) throw Error("cannot append to comparison log");
                write_comparison(out, rec);
                out.flush();
                if (!out) throw Error("failed writing comparison log");
                ++self->next_seq;
            }
            res.status = 201;
            res.set_content(json{{"id", rec.id},
                                 {"method1", rec.method1},
                                 {"method2", rec.method2},
                                 {"hit1", rec.hit1},
                                 {"hit2", rec.hit2}}
                                .dump(),
                            "application/json");
        });
    });
}

QueryService::~QueryService() { stop(); }

void QueryService::swap_engine(std::shared_ptr<const Engine> engine) {
    if (!engine) throw Error("cannot publish an empty engine");
    std::atomic_store(&impl_->engine, std::move(engine));
}

std::shared_ptr<const Engine> QueryService::engine() const { return std::atomic_load(&impl_->engine); }

int QueryService::bind(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void QueryService::listen() { impl_->server.listen_after_bind(); }

void QueryService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void QueryService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace fontpair
