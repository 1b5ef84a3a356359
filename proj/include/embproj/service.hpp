#pragma once

#include "embproj/axis.hpp"
#include "embproj/bookmark.hpp"
#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/knn.hpp"
#include "embproj/pca.hpp"
#include "embproj/selection.hpp"
#include "embproj/tsne.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace embproj {

enum class BusyPolicy { Queue, Reject };

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8765;
    std::optional<std::filesystem::path> static_dir;
    std::optional<std::filesystem::path> spill_dir;
    std::size_t max_cells = kDefaultMaxCells;
    Index max_tsne_points = kDefaultTsneMaxPoints;
    std::size_t max_body_bytes = std::size_t{256} << 20;
    BusyPolicy busy_policy = BusyPolicy::Queue;
};

/// Dataset and t-SNE session registries behind the HTTP API. Datasets are
/// immutable once registered; each session carries its own lock so steps on
/// one session are serialized while distinct sessions run in parallel.
class Engine {
public:
    explicit Engine(ServerConfig config = {}) : config_(std::move(config)) {}

    const ServerConfig& config() const noexcept { return config_; }

    DatasetPtr add_dataset(DatasetPtr ds) {
        std::unique_lock lock(mutex_);
        datasets_.emplace(ds->id(), ds);
        return ds;
    }

    DatasetPtr dataset(const std::string& id) const {
        std::shared_lock lock(mutex_);
        auto it = datasets_.find(id);
        if (it == datasets_.end()) throw Error(ErrorCode::UnknownDataset, "unknown dataset '" + id + "'");
        return it->second;
    }

    std::vector<DatasetPtr> datasets() const {
        std::shared_lock lock(mutex_);
        std::vector<DatasetPtr> out;
        for (const auto& [id, ds] : datasets_) out.push_back(ds);
        return out;
    }

    struct SessionInfo {
        std::string id;
        Index size = 0;
        double perplexity = 0.0;
        TsneProgress progress;
    };

    SessionInfo start_tsne(const std::string& dataset_id, const std::optional<std::vector<Index>>& subset,
                           const TsneParams& params, const std::optional<Matrix>& initial = std::nullopt) {
        auto ds = dataset(dataset_id);
        auto entry = std::make_shared<SessionEntry>(
            dataset_id, start_session(*ds, subset, params, config_.max_tsne_points, initial));
        SessionInfo info{"", entry->session.size(), *entry->session.params().perplexity, entry->session.progress()};
        std::unique_lock lock(mutex_);
        info.id = "ts" + std::to_string(++session_counter_);
        sessions_.emplace(info.id, std::move(entry));
        return info;
    }

    TsneProgress step(const std::string& sid, Index n_iters) {
        auto entry = session(sid);
        std::unique_lock lock(entry->mutex, std::defer_lock);
        if (config_.busy_policy == BusyPolicy::Reject) {
            if (!lock.try_lock()) throw Error(ErrorCode::SessionBusy, "session '" + sid + "' is already stepping");
        } else {
            lock.lock();
        }
        return entry->session.step(n_iters);
    }

    std::pair<Matrix, TsneProgress> coords(const std::string& sid) {
        auto entry = session(sid);
        std::lock_guard lock(entry->mutex);
        return {entry->session.coords(), entry->session.progress()};
    }

    std::vector<Index> session_points(const std::string& sid) {
        auto entry = session(sid);
        std::lock_guard lock(entry->mutex);
        return entry->session.point_indices();
    }

    void close_tsne(const std::string& sid) {
        auto entry = session(sid);
        {
            std::lock_guard lock(entry->mutex);
            entry->session.close();
        }
        std::unique_lock lock(mutex_);
        sessions_.erase(sid);
        closed_.insert(sid);
    }

    void store_bookmarks(const std::string& dataset_id, std::string text) {
        dataset(dataset_id);
        if (config_.spill_dir) {
            std::filesystem::create_directories(*config_.spill_dir);
            std::ofstream out(*config_.spill_dir / (dataset_id + ".bookmarks.json"), std::ios::binary);
            out << text;
        }
        std::unique_lock lock(mutex_);
        bookmarks_[dataset_id] = std::move(text);
    }

    std::optional<std::string> stored_bookmarks(const std::string& dataset_id) const {
        std::shared_lock lock(mutex_);
        auto it = bookmarks_.find(dataset_id);
        if (it == bookmarks_.end()) return std::nullopt;
        return it->second;
    }

private:
    struct SessionEntry {
        SessionEntry(std::string ds, TsneSession s) : dataset_id(std::move(ds)), session(std::move(s)) {}
        std::mutex mutex;
        std::string dataset_id;
        TsneSession session;
    };

    std::shared_ptr<SessionEntry> session(const std::string& sid) const {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(sid);
        if (it != sessions_.end()) return it->second;
        if (closed_.count(sid)) throw Error(ErrorCode::SessionClosed, "t-SNE session '" + sid + "' was closed");
        throw Error(ErrorCode::UnknownSession, "unknown t-SNE session '" + sid + "'");
    }

    ServerConfig config_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, DatasetPtr> datasets_;
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
    std::set<std::string> closed_;
    std::map<std::string, std::string> bookmarks_;
    std::uint64_t session_counter_ = 0;
};

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownSession:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionClosed: return 410;
    case ErrorCode::SessionBusy: return 409;
    case ErrorCode::TooLarge: return 413;
    case ErrorCode::IoError: return 500;
    default: return 400;
    }
}

inline json error_body(const Error& e) {
    json body = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (e.row()) body["row"] = *e.row();
    if (e.column()) body["column"] = *e.column();
    return body;
}

namespace detail {

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
    }
}

inline std::vector<Index> parse_index_list(const std::string& text, const char* what) {
    std::vector<Index> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        const auto token = std::string_view(text).substr(start, end - start);
        Index v = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
            throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "' must be a comma-separated index list");
        }
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

inline Index parse_index(const std::string& text, const char* what) {
    auto v = parse_index_list(text, what);
    if (v.size() != 1) throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "' must be one index");
    return v.front();
}

inline std::vector<Index> index_array(const json& v, const char* what) {
    if (!v.is_array()) throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "' must be an array");
    std::vector<Index> out;
    for (const auto& e : v) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
            throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "' must hold nonnegative integers");
        }
        out.push_back(e.get<Index>());
    }
    return out;
}

inline Matrix matrix_arg(const json& v, const char* what) {
    try {
        return detail::matrix_from(v);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "': " + e.what());
    }
}

inline std::optional<std::vector<Index>> subset_param(const httplib::Request& req) {
    if (!req.has_param("subset")) return std::nullopt;
    return parse_index_list(req.get_param_value("subset"), "subset");
}

inline QuerySpec query_arg(const json& v, const char* side) {
    if (!v.is_object() || !v.contains("pattern") || !v["pattern"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("'") + side + "' needs a string 'pattern'");
    }
    QuerySpec q{v["pattern"].get<std::string>(), MatchMode::Substring};
    if (v.contains("mode")) {
        auto mode = v["mode"].is_string() ? parse_match_mode(v["mode"].get<std::string>()) : std::nullopt;
        if (!mode) throw Error(ErrorCode::InvalidArgument, "query mode must be 'substring' or 'regex'");
        q.mode = *mode;
    }
    return q;
}

inline AxisSpec axis_arg(const json& v, const char* what) {
    if (!v.is_object()) throw Error(ErrorCode::InvalidArgument, std::string("'") + what + "' must be an object");
    return {query_arg(v.value("left", json()), "left"), query_arg(v.value("right", json()), "right")};
}

inline ProjectionAxis make_axis(const EmbeddingDataset& ds, const AxisSpec& spec) {
    return build_axis(ds, match_query(ds, spec.left.pattern, spec.left.mode),
                      match_query(ds, spec.right.pattern, spec.right.mode));
}

inline Matrix subset_points(const DatasetPtr& ds, const std::optional<std::vector<Index>>& subset) {
    if (!subset) return ds->vectors();
    return Subset(ds, *subset).points();
}

inline TsneParams tsne_params_arg(const json& body) {
    TsneParams p;
    auto real = [&](const char* key, double& field) {
        if (!body.contains(key)) return;
        if (!body[key].is_number()) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be a number");
        field = body[key].get<double>();
    };
    auto count = [&](const char* key, Index& field) {
        if (!body.contains(key)) return;
        field = index_array(json::array({body[key]}), key).front();
    };
    if (body.contains("out_dims")) {
        Index dims = 0;
        count("out_dims", dims);
        p.out_dims = static_cast<int>(dims);
    }
    if (body.contains("perplexity") && !body["perplexity"].is_null()) {
        double perp = 0;
        real("perplexity", perp);
        p.perplexity = perp;
    }
    real("learning_rate", p.learning_rate);
    real("early_exaggeration_factor", p.early_exaggeration_factor);
    count("early_exaggeration_iters", p.early_exaggeration_iters);
    real("momentum_initial", p.momentum_initial);
    real("momentum_final", p.momentum_final);
    count("momentum_switch_iter", p.momentum_switch_iter);
    if (body.contains("seed")) {
        const auto& s = body["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            throw Error(ErrorCode::InvalidArgument, "'seed' must be a nonnegative integer");
        }
        p.seed = s.get<std::uint64_t>();
    }
    return p;
}

inline json dataset_summary(const EmbeddingDataset& ds) {
    json cols = json::array();
    for (const auto& c : ds.metadata()) cols.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
    return {{"dataset_id", ds.id()},       {"n", ds.size()},
            {"d", ds.dims()},              {"columns", cols},
            {"label_column", ds.label_column()}, {"fingerprint", ds.fingerprint()},
            {"sources", ds.source_names()}};
}

inline json neighbor_json(const NeighborList& list, const std::vector<std::string>& labels) {
    json nbs = json::array();
    for (const auto& nb : list.neighbors) {
        nbs.push_back({{"index", nb.index}, {"distance", nb.distance}, {"label", labels[nb.index]}});
    }
    return {{"anchor", list.anchor}, {"metric", std::string(to_string(list.metric))}, {"k", list.k}, {"neighbors", nbs}};
}

inline json bookmark_set_json(const BookmarkSet& set) {
    json out = {{"bookmarks", json::array()}, {"warnings", set.warnings}, {"rejected", json::array()}};
    for (const auto& b : set.bookmarks) out["bookmarks"].push_back(to_json(b));
    for (const auto& r : set.rejected) {
        out["rejected"].push_back(
            {{"position", r.position}, {"code", std::string(to_string(r.code))}, {"message", r.message}});
    }
    return out;
}

} // namespace detail

/// Registers every API route on `server`. Handlers translate engine errors
/// into `{code, message, row?, column?}` bodies.
inline void install_routes(httplib::Server& server, std::shared_ptr<Engine> engine) {
    using detail::send_json;
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    auto guarded = [](Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const Error& e) {
                send_json(res, error_body(e), http_status(e.code()));
            } catch (const std::exception& e) {
                send_json(res, {{"code", "InternalError"}, {"message", e.what()}}, 500);
            }
        };
    };
    auto& eng = *engine;
    const auto& cfg = engine->config();

    server.set_payload_max_length(cfg.max_body_bytes);
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        std::string code = res.status == 413 ? "TooLarge" : res.status == 404 ? "NotFound" : "HttpError";
        send_json(res, {{"code", code}, {"message", httplib::status_message(res.status)}}, res.status);
    });
    if (cfg.static_dir) server.set_mount_point("/", cfg.static_dir->string());

    server.Get("/api/health", guarded([](const auto&, auto& res) { send_json(res, {{"status", "ok"}}); }));

    server.Get("/api/datasets", guarded([&eng](const auto&, auto& res) {
        json list = json::array();
        for (const auto& ds : eng.datasets()) list.push_back(detail::dataset_summary(*ds));
        send_json(res, {{"datasets", list}});
    }));

    server.Post("/api/datasets", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("vectors")) throw Error(ErrorCode::InvalidArgument, "multipart field 'vectors' is required");
        const auto vectors = req.get_file_value("vectors");
        std::optional<std::string> metadata;
        std::vector<std::string> sources{vectors.filename};
        if (req.has_file("metadata")) {
            auto m = req.get_file_value("metadata");
            metadata = m.content;
            sources.push_back(m.filename);
        }
        LoadOptions options;
        options.max_cells = eng.config().max_cells;
        if (req.has_file("label_column")) options.label_column = req.get_file_value("label_column").content;
        auto ds = make_dataset(vectors.content,
                               metadata ? std::optional<std::string_view>(*metadata) : std::nullopt, options,
                               std::move(sources));
        eng.add_dataset(ds);
        send_json(res, detail::dataset_summary(*ds), 201);
    }));

    server.Get(R"(/api/datasets/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        send_json(res, detail::dataset_summary(*eng.dataset(req.matches[1])));
    }));

    server.Get(R"(/api/datasets/([^/]+)/pca)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        auto ds = eng.dataset(req.matches[1]);
        const auto axes = detail::parse_index_list(req.has_param("axes") ? req.get_param_value("axes") : "0,1", "axes");
        const Matrix points = detail::subset_points(ds, detail::subset_param(req));
        const PcaModel model = fit_pca(points);
        const Matrix coords = project_pca(model, points, axes);
        send_json(res, {{"coords", matrix_to_json(coords)},
                        {"axes", axes},
                        {"explained_variance", model.explained_variance},
                        {"explained_fraction", model.explained_fraction},
                        {"num_components", model.num_components()}});
    }));

    server.Get(R"(/api/datasets/([^/]+)/neighbors)",
               guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                   auto ds = eng.dataset(req.matches[1]);
                   if (!req.has_param("anchor")) throw Error(ErrorCode::InvalidArgument, "'anchor' is required");
                   const Index anchor = detail::parse_index(req.get_param_value("anchor"), "anchor");
                   const Index k = req.has_param("k") ? detail::parse_index(req.get_param_value("k"), "k") : 10;
                   Metric metric = Metric::Cosine;
                   if (req.has_param("metric")) {
                       auto m = parse_metric(req.get_param_value("metric"));
                       if (!m) throw Error(ErrorCode::InvalidArgument, "metric must be 'cosine' or 'euclidean'");
                       metric = *m;
                   }
                   NeighborList list;
                   if (auto subset = detail::subset_param(req)) {
                       list = Subset(ds, *subset).neighbors_of(anchor, k, metric);
                   } else {
                       list = neighbors(ds->vectors(), anchor, k, metric);
                   }
                   send_json(res, detail::neighbor_json(list, ds->labels()));
               }));

    server.Get(R"(/api/datasets/([^/]+)/points/(\d+))",
               guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                   auto ds = eng.dataset(req.matches[1]);
                   const Index i = detail::parse_index(req.matches[2], "point");
                   if (i >= ds->size()) throw Error(ErrorCode::NotFound, "point " + std::to_string(i) + " does not exist");
                   json meta = json::object();
                   for (const auto& col : ds->metadata()) {
                       const auto& v = col.values[i];
                       meta[col.name] = col.kind == ColumnKind::Numeric ? json(*detail::parse_finite(v)) : json(v);
                   }
                   send_json(res, {{"index", i}, {"label", ds->labels()[i]}, {"metadata", meta}});
               }));

    server.Post(R"(/api/datasets/([^/]+)/tsne)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const json body = detail::parse_body(req);
        std::optional<std::vector<Index>> subset;
        if (body.contains("subset") && !body["subset"].is_null()) subset = detail::index_array(body["subset"], "subset");
        std::optional<Matrix> initial;
        if (body.contains("init_coords") && !body["init_coords"].is_null()) {
            initial = detail::matrix_arg(body["init_coords"], "init_coords");
        }
        const auto info = eng.start_tsne(id, subset, detail::tsne_params_arg(body), initial);
        send_json(res,
                  {{"session_id", info.id},
                   {"n", info.size},
                   {"perplexity", info.perplexity},
                   {"iteration", info.progress.iteration},
                   {"kl", info.progress.kl}},
                  201);
    }));

    server.Post(R"(/api/tsne/([^/]+)/step)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        const json body = detail::parse_body(req);
        Index n_iters = 1;
        if (body.contains("n_iters")) n_iters = detail::index_array(json::array({body["n_iters"]}), "n_iters").front();
        const auto progress = eng.step(req.matches[1], n_iters);
        send_json(res, {{"iteration", progress.iteration}, {"kl", progress.kl}});
    }));

    server.Get(R"(/api/tsne/([^/]+)/coords)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        auto [coords, progress] = eng.coords(req.matches[1]);
        send_json(res, {{"coords", matrix_to_json(coords)},
                        {"iteration", progress.iteration},
                        {"kl", progress.kl},
                        {"point_indices", eng.session_points(req.matches[1])}});
    }));

    server.Delete(R"(/api/tsne/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        eng.close_tsne(req.matches[1]);
        send_json(res, {{"closed", true}});
    }));

    server.Post(R"(/api/datasets/([^/]+)/axis)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        auto ds = eng.dataset(req.matches[1]);
        const auto spec = detail::axis_arg(detail::parse_body(req), "body");
        auto left = match_query(*ds, spec.left.pattern, spec.left.mode);
        auto right = match_query(*ds, spec.right.pattern, spec.right.mode);
        json out = {{"left", {{"pattern", left.pattern}, {"mode", std::string(to_string(left.mode))}, {"count", left.matched.size()}}},
                    {"right", {{"pattern", right.pattern}, {"mode", std::string(to_string(right.mode))}, {"count", right.matched.size()}}}};
        try {
            const auto axis = build_axis(*ds, std::move(left), std::move(right));
            out["valid"] = true;
            out["length"] = axis.length();
        } catch (const Error& e) {
            out["valid"] = false;
            out["error"] = error_body(e);
        }
        send_json(res, out);
    }));

    server.Post(R"(/api/datasets/([^/]+)/project_custom)",
                guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                    auto ds = eng.dataset(req.matches[1]);
                    const json body = detail::parse_body(req);
                    const auto x = detail::make_axis(*ds, detail::axis_arg(body.value("x_axis", json()), "x_axis"));
                    const auto y = detail::make_axis(*ds, detail::axis_arg(body.value("y_axis", json()), "y_axis"));
                    std::optional<ProjectionAxis> z;
                    if (body.contains("z_axis") && !body["z_axis"].is_null()) {
                        z = detail::make_axis(*ds, detail::axis_arg(body["z_axis"], "z_axis"));
                    }
                    std::optional<std::vector<Index>> subset;
                    if (body.contains("subset") && !body["subset"].is_null()) {
                        subset = detail::index_array(body["subset"], "subset");
                    }
                    const Matrix points = detail::subset_points(ds, subset);
                    send_json(res, {{"coords", matrix_to_json(project_axes(points, x, y, z ? &*z : nullptr))}});
                }));

    server.Post(R"(/api/datasets/([^/]+)/select)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        auto ds = eng.dataset(req.matches[1]);
        const json body = detail::parse_body(req);
        const std::string mode = body.value("mode", "");
        Selection sel;
        if (mode == "click") {
            if (!body.contains("anchor")) throw Error(ErrorCode::InvalidArgument, "'anchor' is required");
            const Index anchor = detail::index_array(json::array({body["anchor"]}), "anchor").front();
            const Index k = body.contains("k") ? detail::index_array(json::array({body["k"]}), "k").front() : 10;
            auto metric = parse_metric(body.value("metric", "cosine"));
            if (!metric) throw Error(ErrorCode::InvalidArgument, "metric must be 'cosine' or 'euclidean'");
            sel = select_by_click(*ds, anchor, k, *metric);
        } else if (mode == "search") {
            json query = {{"pattern", body.value("pattern", json())}, {"mode", body.value("match", "substring")}};
            const auto q = detail::query_arg(query, "search");
            sel = select_by_search(*ds, q.pattern, q.mode);
        } else if (mode == "sphere") {
            const Matrix coords = detail::matrix_arg(body.value("coords", json()), "coords");
            const json center = body.value("center", json());
            if (!center.is_array()) throw Error(ErrorCode::InvalidArgument, "'center' must be an array");
            std::vector<double> c;
            for (const auto& v : center) {
                if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, "'center' must hold numbers");
                c.push_back(v.get<double>());
            }
            const json radius = body.value("radius", json());
            if (!radius.is_number()) throw Error(ErrorCode::InvalidArgument, "'radius' must be a number");
            sel = select_by_sphere(coords, c, radius.get<double>(), ds->id());
        } else {
            throw Error(ErrorCode::InvalidArgument, "mode must be 'click', 'search' or 'sphere'");
        }
        send_json(res, {{"indices", sel.indices()}, {"origin", std::string(to_string(sel.origin()))}});
    }));

    server.Post(R"(/api/datasets/([^/]+)/bookmarks)",
                guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                    auto ds = eng.dataset(req.matches[1]);
                    json body = detail::parse_body(req);
                    if (!body.contains("bookmarks") || !body["bookmarks"].is_array()) {
                        throw Error(ErrorCode::InvalidArgument, "'bookmarks' must be an array");
                    }
                    std::vector<Bookmark> list;
                    for (auto& b : body["bookmarks"]) {
                        if (b.is_object() && (!b.contains("dataset_fingerprint") || b["dataset_fingerprint"] == "")) {
                            b["dataset_fingerprint"] = ds->fingerprint();
                        }
                        list.push_back(bookmark_from_json(b));
                    }
                    json extra = body;
                    extra.erase("bookmarks");
                    extra.erase("version");
                    std::string text = render_bookmarks(list, extra);
                    eng.store_bookmarks(ds->id(), text);
                    res.status = 201;
                    res.set_content(text, "application/json");
                }));

    server.Get(R"(/api/datasets/([^/]+)/bookmarks)",
               guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                   auto ds = eng.dataset(req.matches[1]);
                   auto text = eng.stored_bookmarks(ds->id());
                   if (req.has_param("raw")) {
                       res.set_content(text ? *text : render_bookmarks({}), "application/json");
                       return;
                   }
                   send_json(res, detail::bookmark_set_json(text ? parse_bookmarks(*text, ds.get()) : BookmarkSet{}));
               }));

    server.Post(R"(/api/datasets/([^/]+)/bookmarks/import)",
                guarded([&eng](const httplib::Request& req, httplib::Response& res) {
                    auto ds = eng.dataset(req.matches[1]);
                    auto set = parse_bookmarks(req.body, ds.get());
                    eng.store_bookmarks(ds->id(), render_bookmarks(set.bookmarks, set.extra));
                    send_json(res, detail::bookmark_set_json(set));
                }));
}

} // namespace embproj
