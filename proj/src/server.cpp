#include "companioncast/server.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"

namespace companioncast {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

/// Serial executor owned by one session.
class Worker {
public:
    Worker() : thread_([this] { loop(); }) {}

    ~Worker() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_one();
        if (thread_.get_id() == std::this_thread::get_id()) {
            thread_.detach();
        } else {
            thread_.join();
        }
    }

    void post(std::function<void()> task) {
        {
            std::lock_guard lock(mutex_);
            tasks_.push_back(std::move(task));
        }
        cv_.notify_one();
    }

private:
    void loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
                if (tasks_.empty()) {
                    return;
                }
                task = std::move(tasks_.front());
                tasks_.pop_front();
            }
            task();
        }
    }

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    bool stopping_ = false;
    std::thread thread_;
};

class WsConnection;

/// Fans one session's events out to its stream subscribers.
class SessionHub {
public:
    SessionHub(std::shared_ptr<Session> session, std::size_t max_inline_bytes)
        : session_(std::move(session)), max_inline_bytes_(max_inline_bytes) {}

    void attach_listener(const std::shared_ptr<SessionHub>& self) {
        std::weak_ptr<SessionHub> weak = self;
        session_->set_listener([weak](const SessionEvent& ev) {
            if (auto hub = weak.lock()) {
                hub->broadcast(ev);
            }
        });
    }

    void subscribe(const std::shared_ptr<WsConnection>& conn, std::optional<std::int64_t> from_seq);
    void broadcast(const SessionEvent& ev);

    void post(std::function<void()> task) { worker_.post(std::move(task)); }

    Session& session() { return *session_; }

private:
    struct Subscriber {
        std::weak_ptr<WsConnection> conn;
        std::int64_t next_seq = 0;
    };

    void deliver(Subscriber& sub, const SessionEvent& ev);

    std::shared_ptr<Session> session_;
    std::size_t max_inline_bytes_;
    std::mutex mutex_;
    std::vector<Subscriber> subscribers_;
    Worker worker_;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket socket, std::shared_ptr<SessionHub> hub, std::optional<std::int64_t> from_seq)
        : ws_(std::move(socket)), hub_(std::move(hub)), from_seq_(from_seq) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.text(true);
        ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
    }

    /// Thread-safe; frames are written in call order.
    void send(std::string frame) {
        asio::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
            self->queue_.push_back(std::move(frame));
            if (self->queue_.size() == 1) {
                self->write_next();
            }
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) {
            spdlog::warn("stream: accept failed: {}", ec.message());
            return;
        }
        hub_->subscribe(shared_from_this(), from_seq_);
        read_next();
    }

    void read_next() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            if (ec != websocket::error::closed) {
                spdlog::debug("stream: read ended: {}", ec.message());
            }
            return;
        }
        const auto text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        handle_frame(text);
        read_next();
    }

    void handle_frame(const std::string& text) {
        nlohmann::json frame;
        try {
            frame = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error&) {
            return reject("frame is not valid JSON");
        }
        const auto kind = frame.is_object() ? frame.value("kind", std::string{}) : std::string{};
        if (kind == "clock_sync") {
            const auto it = frame.find("video_t");
            if (it == frame.end() || !it->is_number()) {
                return reject("clock_sync needs a numeric video_t");
            }
            const double t = it->get<double>();
            hub_->post([hub = hub_, t] {
                try {
                    hub->session().on_clock(t);
                } catch (const std::exception& e) {
                    spdlog::error("session {}: clock_sync failed: {}", hub->session().id(), e.what());
                }
            });
        } else if (kind == "user_message") {
            const auto it = frame.find("text");
            if (it == frame.end() || !it->is_string() || it->get<std::string>().find_first_not_of(" \t\r\n") ==
                                                             std::string::npos) {
                return reject("user_message needs non-empty text");
            }
            hub_->post([hub = hub_, msg = it->get<std::string>()] {
                try {
                    hub->session().on_user_message(msg);
                } catch (const std::exception& e) {
                    spdlog::error("session {}: user_message failed: {}", hub->session().id(), e.what());
                }
            });
        } else {
            reject(fmt::format("unknown frame kind '{}'", kind));
        }
    }

    void reject(const std::string& message) {
        send(nlohmann::ordered_json{{"kind", "error"}, {"stage", "protocol"}, {"message", message}}.dump());
    }

    void write_next() {
        ws_.async_write(asio::buffer(queue_.front()),
                        beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            spdlog::debug("stream: write failed: {}", ec.message());
            queue_.clear();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) {
            write_next();
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::shared_ptr<SessionHub> hub_;
    std::optional<std::int64_t> from_seq_;
    std::deque<std::string> queue_;
};

void SessionHub::subscribe(const std::shared_ptr<WsConnection>& conn, std::optional<std::int64_t> from_seq) {
    std::lock_guard lock(mutex_);
    Subscriber sub{conn, from_seq ? *from_seq : session_->log().next_seq()};
    for (const auto& ev : session_->log().events_since(sub.next_seq)) {
        deliver(sub, ev);
    }
    subscribers_.push_back(std::move(sub));
}

void SessionHub::broadcast(const SessionEvent& ev) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [](const Subscriber& s) { return s.conn.expired(); });
    for (auto& sub : subscribers_) {
        deliver(sub, ev);
    }
}

void SessionHub::deliver(Subscriber& sub, const SessionEvent& ev) {
    if (ev.seq < sub.next_seq) {
        return;
    }
    if (auto conn = sub.conn.lock()) {
        conn->send(stream_frame(ev, session_->id(), max_inline_bytes_).dump());
    }
    sub.next_seq = ev.seq + 1;
}

struct Route {
    std::vector<std::string> parts;
    std::map<std::string, std::string> query;
};

Route parse_target(std::string_view target) {
    Route r;
    const auto q = target.find('?');
    auto path = target.substr(0, q);
    if (q != std::string_view::npos) {
        auto qs = target.substr(q + 1);
        while (!qs.empty()) {
            const auto amp = qs.find('&');
            const auto pair = qs.substr(0, amp);
            const auto eq = pair.find('=');
            r.query[std::string(pair.substr(0, eq))] =
                eq == std::string_view::npos ? std::string{} : std::string(pair.substr(eq + 1));
            if (amp == std::string_view::npos) {
                break;
            }
            qs.remove_prefix(amp + 1);
        }
    }
    std::size_t start = 0;
    while (start < path.size()) {
        const auto slash = path.find('/', start);
        const auto part = path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
        if (!part.empty()) {
            r.parts.emplace_back(part);
        }
        if (slash == std::string_view::npos) {
            break;
        }
        start = slash + 1;
    }
    return r;
}

} // namespace

struct Server::Impl {
    Impl(std::shared_ptr<Engine> e, ServerOptions o) : engine(std::move(e)), options(std::move(o)), acceptor(ioc) {}

    std::shared_ptr<Engine> engine;
    ServerOptions options;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    std::vector<std::thread> threads;
    std::mutex hubs_mutex;
    std::map<std::string, std::shared_ptr<SessionHub>> hubs;
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopped = false;

    std::shared_ptr<SessionHub> hub_for(const std::string& session_id) {
        auto session = engine->session(session_id);
        std::lock_guard lock(hubs_mutex);
        auto& hub = hubs[session_id];
        if (!hub) {
            hub = std::make_shared<SessionHub>(std::move(session), engine->config().max_inline_audio_bytes);
            hub->attach_listener(hub);
        }
        return hub;
    }

    void do_accept();
    http::response<http::string_body> handle(const http::request<http::string_body>& req);
};

namespace {

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

    void run() { read_next(); }

private:
    void read_next() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            return;
        }
        if (websocket::is_upgrade(req_)) {
            upgrade();
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(server_.handle(req_));
        res->keep_alive(req_.keep_alive());
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
            if (!wec && res->keep_alive()) {
                self->read_next();
            } else {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            }
        });
    }

    void upgrade() {
        const auto route = parse_target(std::string_view(req_.target().data(), req_.target().size()));
        if (route.parts.size() != 3 || route.parts[0] != "sessions" || route.parts[2] != "stream") {
            return reply_error(http::status::not_found, "no stream at this path");
        }
        std::shared_ptr<SessionHub> hub;
        try {
            hub = server_.hub_for(route.parts[1]);
        } catch (const NotFoundError& e) {
            return reply_error(http::status::not_found, e.what());
        }
        std::optional<std::int64_t> from_seq;
        if (const auto it = route.query.find("from_seq"); it != route.query.end()) {
            try {
                from_seq = std::stoll(it->second);
            } catch (const std::exception&) {
                return reply_error(http::status::bad_request, "from_seq must be an integer");
            }
        }
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), std::move(hub), from_seq)->run(std::move(req_));
    }

    void reply_error(http::status status, const std::string& message) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, "application/json");
        res->body() = nlohmann::json{{"error", message}}.dump();
        res->keep_alive(false);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Server::Impl& server_;
};

http::response<http::string_body> json_response(http::status status, unsigned version, const nlohmann::json& body) {
    http::response<http::string_body> res(status, version);
    res.set(http::field::content_type, "application/json");
    res.body() = body.dump();
    return res;
}

} // namespace

void Server::Impl::do_accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec != asio::error::operation_aborted && acceptor.is_open()) {
                spdlog::warn("accept failed: {}", ec.message());
            }
            if (!acceptor.is_open()) {
                return;
            }
        } else {
            std::make_shared<HttpConnection>(std::move(socket), *this)->run();
        }
        do_accept();
    });
}

http::response<http::string_body> Server::Impl::handle(const http::request<http::string_body>& req) {
    const auto route = parse_target(std::string_view(req.target().data(), req.target().size()));
    const auto& p = route.parts;
    const auto v = req.version();
    const auto method = req.method();
    try {
        if (p.size() == 1 && p[0] == "healthz" && method == http::verb::get) {
            return json_response(http::status::ok, v, {{"status", "ok"}});
        }
        if (p.size() == 1 && p[0] == "timelines") {
            if (method == http::verb::post) {
                std::vector<std::string> warnings;
                auto doc = parse_timeline(req.body(), &warnings);
                for (const auto& w : warnings) {
                    spdlog::warn("POST /timelines: {}", w);
                }
                const auto id = engine->add_timeline(std::move(doc));
                return json_response(http::status::created, v, {{"timeline_id", id}, {"warnings", warnings}});
            }
            if (method == http::verb::get) {
                auto list = nlohmann::json::array();
                for (const auto& [id, doc] : engine->timelines()) {
                    list.push_back({{"timeline_id", id},
                                    {"video_id", doc->video_id},
                                    {"duration_s", doc->duration_s},
                                    {"home_team", doc->home_team},
                                    {"away_team", doc->away_team}});
                }
                return json_response(http::status::ok, v, list);
            }
        }
        if (p.size() == 1 && p[0] == "sessions" && method == http::verb::post) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body());
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(fmt::format("session request: {}", e.what()));
            }
            if (!body.is_object() || !body.contains("timeline_id") || !body.at("timeline_id").is_string()) {
                throw ValidationError("session request: timeline_id (string) is required");
            }
            const auto team = team_side_from_string(body.value("supported_team", std::string{}));
            if (!team) {
                throw ValidationError("session request: supported_team must be \"home\" or \"away\"");
            }
            std::optional<std::uint64_t> seed;
            if (body.contains("seed") && body.at("seed").is_number_unsigned()) {
                seed = body.at("seed").get<std::uint64_t>();
            }
            const auto session = engine->create_session(body.at("timeline_id").get<std::string>(), *team, seed);
            hub_for(session->id());
            return json_response(http::status::created, v, {{"session_id", session->id()}});
        }
        if (p.size() == 3 && p[0] == "sessions" && p[2] == "transcript" && method == http::verb::get) {
            http::response<http::string_body> res(http::status::ok, v);
            res.set(http::field::content_type, "application/x-ndjson");
            res.body() = engine->session(p[1])->transcript_jsonl();
            return res;
        }
        if (p.size() == 4 && p[0] == "sessions" && p[2] == "blobs" && method == http::verb::get) {
            const auto session = engine->session(p[1]);
            std::int64_t seq = -1;
            try {
                seq = std::stoll(p[3]);
            } catch (const std::exception&) {
            }
            const auto ev = session->log().find(seq);
            if (!ev || !ev->audio) {
                throw NotFoundError(fmt::format("no audio for event {}", p[3]));
            }
            http::response<http::string_body> res(http::status::ok, v);
            res.set(http::field::content_type, "audio/wav");
            res.body().assign(ev->audio->begin(), ev->audio->end());
            return res;
        }
        return json_response(http::status::not_found, v, {{"error", "no such endpoint"}});
    } catch (const NotFoundError& e) {
        return json_response(http::status::not_found, v, {{"error", e.what()}});
    } catch (const ParseError& e) {
        return json_response(http::status::bad_request, v, {{"error", e.what()}});
    } catch (const ValidationError& e) {
        return json_response(http::status::bad_request, v, {{"error", e.what()}});
    } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", std::string(req.method_string()), std::string(req.target()), e.what());
        return json_response(http::status::internal_server_error, v, {{"error", e.what()}});
    }
}

Server::Server(std::shared_ptr<Engine> engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(engine), std::move(options))) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
    const auto endpoint = tcp::endpoint(asio::ip::make_address(impl_->options.address), impl_->options.port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen(asio::socket_base::max_listen_connections);
    impl_->do_accept();
    for (int i = 0; i < std::max(1, impl_->options.io_threads); ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
    spdlog::info("listening on {}:{}", impl_->options.address, port());
    return port();
}

void Server::stop() {
    {
        std::lock_guard lock(impl_->stop_mutex);
        if (impl_->stopped) {
            return;
        }
        impl_->stopped = true;
    }
    impl_->stop_cv.notify_all();
    asio::post(impl_->ioc, [this] {
        beast::error_code ignored;
        impl_->acceptor.close(ignored);
    });
    impl_->ioc.stop();
    for (auto& t : impl_->threads) {
        if (t.joinable()) {
            t.join();
        }
    }
    impl_->threads.clear();
    std::lock_guard lock(impl_->hubs_mutex);
    impl_->hubs.clear();
}

void Server::wait() {
    std::unique_lock lock(impl_->stop_mutex);
    impl_->stop_cv.wait(lock, [this] { return impl_->stopped; });
}

unsigned short Server::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

} // namespace companioncast
