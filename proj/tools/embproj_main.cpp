// Command-line front end: headless subcommands for scripted use, plus `serve`
// to run the HTTP API.

#include "embproj.hpp"
#include "embproj/service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace embproj;

struct DataArgs {
    std::string vectors;
    std::string metadata;
    std::string label_column;
    std::size_t max_cells = kDefaultMaxCells;

    void add_to(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("-v,--vectors", vectors, "Vectors TSV file");
        if (required) opt->required();
        opt->check(CLI::ExistingFile);
        cmd->add_option("-m,--metadata", metadata, "Metadata TSV file")->check(CLI::ExistingFile);
        cmd->add_option("--label-column", label_column, "Column used for labels and queries");
        cmd->add_option("--max-cells", max_cells, "Largest accepted N*D")->capture_default_str();
    }

    DatasetPtr load() const {
        LoadOptions options;
        options.max_cells = max_cells;
        if (!label_column.empty()) options.label_column = label_column;
        std::optional<std::filesystem::path> meta;
        if (!metadata.empty()) meta = metadata;
        return load_dataset(vectors, meta, options);
    }
};

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << text;
}

std::optional<std::vector<Index>> parse_subset(const std::vector<Index>& subset) {
    if (subset.empty()) return std::nullopt;
    return subset;
}

MatchMode mode_from(const std::string& s) {
    auto m = parse_match_mode(s);
    if (!m) throw Error(ErrorCode::InvalidArgument, "mode must be 'substring' or 'regex'");
    return *m;
}

int run_serve(const ServerConfig& config, const DataArgs& data, const std::string& bookmarks_file) {
    auto engine = std::make_shared<Engine>(config);
    if (!data.vectors.empty()) {
        auto ds = engine->add_dataset(data.load());
        std::cerr << "loaded dataset " << ds->id() << " (" << ds->size() << " x " << ds->dims() << ")\n";
        if (!bookmarks_file.empty()) {
            auto set = load_bookmarks(bookmarks_file, ds.get());
            for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
            for (const auto& r : set.rejected) {
                std::cerr << "rejected bookmark " << r.position << ": " << to_string(r.code) << ": " << r.message << "\n";
            }
            engine->store_bookmarks(ds->id(), render_bookmarks(set.bookmarks, set.extra));
        }
    } else if (!bookmarks_file.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--bookmarks needs --data");
    }

    httplib::Server server;
    install_routes(server, engine);
    std::cerr << "listening on http://" << config.bind_address << ":" << config.port << "\n";
    if (!server.listen(config.bind_address, config.port)) {
        throw Error(ErrorCode::IoError, "cannot listen on " + config.bind_address + ":" + std::to_string(config.port));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Embedding projection workbench"};
    app.require_subcommand(1);

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    ServerConfig config;
    DataArgs serve_data;
    std::string bookmarks_file;
    std::string busy = "queue";
    serve->add_option("--port", config.port, "Listen port")->envname("EMBPROJ_PORT")->capture_default_str();
    serve->add_option("--bind", config.bind_address, "Bind address")->envname("EMBPROJ_BIND")->capture_default_str();
    serve->add_option("--data", serve_data.vectors, "Preload a vectors TSV")
        ->envname("EMBPROJ_DATA")
        ->check(CLI::ExistingFile);
    serve->add_option("--metadata", serve_data.metadata, "Metadata TSV for --data")
        ->envname("EMBPROJ_METADATA")
        ->check(CLI::ExistingFile);
    serve->add_option("--label-column", serve_data.label_column, "Label column for --data");
    serve->add_option("--bookmarks", bookmarks_file, "Preload a bookmark file for --data")
        ->envname("EMBPROJ_BOOKMARKS")
        ->check(CLI::ExistingFile);
    serve->add_option("--max-points", config.max_tsne_points, "Largest t-SNE session")
        ->envname("EMBPROJ_MAX_POINTS")
        ->capture_default_str();
    serve->add_option("--max-cells", config.max_cells, "Largest accepted N*D")
        ->envname("EMBPROJ_MAX_CELLS")
        ->capture_default_str();
    serve->add_option("--max-body", config.max_body_bytes, "Request body limit in bytes")
        ->envname("EMBPROJ_MAX_BODY")
        ->capture_default_str();
    std::string static_dir, spill_dir;
    serve->add_option("--static", static_dir, "Directory with the UI bundle")->envname("EMBPROJ_STATIC");
    serve->add_option("--spill-dir", spill_dir, "Directory where saved bookmarks are also written")
        ->envname("EMBPROJ_SPILL_DIR");
    serve->add_option("--busy", busy, "Concurrent step policy")
        ->check(CLI::IsMember({"queue", "reject"}))
        ->envname("EMBPROJ_BUSY")
        ->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate and summarize a dataset");
    DataArgs ingest_data;
    ingest_data.add_to(ingest);

    // pca
    auto* pca = app.add_subcommand("pca", "Project onto principal components");
    DataArgs pca_data;
    std::vector<Index> pca_axes{0, 1};
    std::vector<Index> pca_subset;
    std::string pca_out;
    pca_data.add_to(pca);
    pca->add_option("--axes", pca_axes, "Component indices (2 or 3)")->delimiter(',')->capture_default_str();
    pca->add_option("--subset", pca_subset, "Isolate these point indices")->delimiter(',');
    pca->add_option("-o,--out", pca_out, "Output coordinates TSV (default stdout)");

    // tsne
    auto* tsne = app.add_subcommand("tsne", "Run exact t-SNE for a fixed number of iterations");
    DataArgs tsne_data;
    TsneParams tsne_params;
    double perplexity = 0.0;
    Index iterations = 1000;
    std::vector<Index> tsne_subset;
    std::string tsne_out, tsne_bookmark;
    Index tsne_max_points = kDefaultTsneMaxPoints;
    tsne_data.add_to(tsne);
    tsne->add_option("--iterations", iterations, "Gradient steps")->capture_default_str();
    tsne->add_option("--dims", tsne_params.out_dims, "Output dimensions")->check(CLI::IsMember({2, 3}))->capture_default_str();
    tsne->add_option("--perplexity", perplexity, "Target perplexity (default min(30, (N-1)/3))");
    tsne->add_option("--learning-rate", tsne_params.learning_rate)->capture_default_str();
    tsne->add_option("--exaggeration", tsne_params.early_exaggeration_factor)->capture_default_str();
    tsne->add_option("--exaggeration-iters", tsne_params.early_exaggeration_iters)->capture_default_str();
    tsne->add_option("--seed", tsne_params.seed)->capture_default_str();
    tsne->add_option("--subset", tsne_subset, "Isolate these point indices")->delimiter(',');
    tsne->add_option("--max-points", tsne_max_points)->capture_default_str();
    tsne->add_option("-o,--out", tsne_out, "Output coordinates TSV (default stdout)");
    tsne->add_option("--bookmark", tsne_bookmark, "Also save the result as a bookmark file");

    // neighbors
    auto* nbrs = app.add_subcommand("neighbors", "List nearest neighbors of a point");
    DataArgs nbrs_data;
    Index anchor = 0, k = 10;
    std::string metric_name = "cosine";
    nbrs_data.add_to(nbrs);
    nbrs->add_option("--anchor", anchor)->required();
    nbrs->add_option("-k", k)->capture_default_str();
    nbrs->add_option("--metric", metric_name)->check(CLI::IsMember({"cosine", "euclidean"}))->capture_default_str();

    // axis
    auto* axis = app.add_subcommand("axis", "Project onto centroid-difference axes built from label queries");
    DataArgs axis_data;
    std::string mode_name = "substring";
    std::string xl, xr, yl, yr, zl, zr, axis_out;
    axis_data.add_to(axis);
    axis->add_option("--x-left", xl)->required();
    axis->add_option("--x-right", xr)->required();
    axis->add_option("--y-left", yl)->required();
    axis->add_option("--y-right", yr)->required();
    axis->add_option("--z-left", zl);
    axis->add_option("--z-right", zr);
    axis->add_option("--mode", mode_name)->check(CLI::IsMember({"substring", "regex"}))->capture_default_str();
    axis->add_option("-o,--out", axis_out, "Output coordinates TSV (default stdout)");

    // bookmark validate
    auto* bookmark = app.add_subcommand("bookmark", "Bookmark file utilities");
    bookmark->require_subcommand(1);
    auto* validate = bookmark->add_subcommand("validate", "Check a bookmark file");
    std::string validate_file;
    DataArgs validate_data;
    validate->add_option("file", validate_file)->required()->check(CLI::ExistingFile);
    validate_data.add_to(validate, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            config.busy_policy = busy == "reject" ? BusyPolicy::Reject : BusyPolicy::Queue;
            if (!static_dir.empty()) config.static_dir = static_dir;
            if (!spill_dir.empty()) config.spill_dir = spill_dir;
            serve_data.max_cells = config.max_cells;
            return run_serve(config, serve_data, bookmarks_file);
        }
        if (*ingest) {
            auto ds = ingest_data.load();
            std::cout << detail::dataset_summary(*ds).dump(2) << "\n";
            return 0;
        }
        if (*pca) {
            auto ds = pca_data.load();
            const Matrix points = pca_subset.empty() ? ds->vectors() : Subset(ds, pca_subset).points();
            const auto model = fit_pca(points);
            write_output(pca_out, format_vectors(project_pca(model, points, pca_axes)));
            for (std::size_t i = 0; i < model.explained_fraction.size(); ++i) {
                std::cerr << "component " << i << ": variance " << format_real(model.explained_variance[i])
                          << " fraction " << format_real(model.explained_fraction[i]) << "\n";
            }
            return 0;
        }
        if (*tsne) {
            auto ds = tsne_data.load();
            if (perplexity > 0) tsne_params.perplexity = perplexity;
            auto session = start_session(*ds, parse_subset(tsne_subset), tsne_params, tsne_max_points);
            const auto progress = session.step(iterations);
            const Matrix coords = session.coords();
            write_output(tsne_out, format_vectors(coords));
            std::cerr << "iteration " << progress.iteration << " kl " << format_real(progress.kl) << "\n";
            if (!tsne_bookmark.empty()) {
                Bookmark b;
                b.label = "t-SNE " + std::to_string(progress.iteration) + " iterations";
                b.dataset_fingerprint = ds->fingerprint();
                b.projection = TsneView{session.params(), progress.iteration, coords};
                b.subset = tsne_subset;
                b.label_column = ds->label_column();
                std::vector<Bookmark> list{b};
                save_bookmarks(list, tsne_bookmark);
            }
            return 0;
        }
        if (*nbrs) {
            auto ds = nbrs_data.load();
            const auto list = neighbors(ds->vectors(), anchor, k, *parse_metric(metric_name));
            const auto& labels = ds->labels();
            std::string text = "index\tlabel\tdistance\n";
            for (const auto& nb : list.neighbors) {
                text += std::to_string(nb.index) + "\t" + labels[nb.index] + "\t" + format_real(nb.distance) + "\n";
            }
            std::cout << text;
            return 0;
        }
        if (*axis) {
            auto ds = axis_data.load();
            const MatchMode mode = mode_from(mode_name);
            auto make = [&](const std::string& l, const std::string& r) {
                auto a = build_axis(*ds, match_query(*ds, l, mode), match_query(*ds, r, mode));
                std::cerr << "axis '" << l << "' (" << a.left.matched.size() << ") -> '" << r << "' ("
                          << a.right.matched.size() << "), length " << format_real(a.length()) << "\n";
                return a;
            };
            const auto x = make(xl, xr);
            const auto y = make(yl, yr);
            std::optional<ProjectionAxis> z;
            if (!zl.empty() || !zr.empty()) z = make(zl, zr);
            write_output(axis_out, format_vectors(project_axes(ds->vectors(), x, y, z ? &*z : nullptr)));
            return 0;
        }
        if (*validate) {
            DatasetPtr ds;
            if (!validate_data.vectors.empty()) ds = validate_data.load();
            const auto set = load_bookmarks(validate_file, ds.get());
            std::cout << set.bookmarks.size() << " bookmark(s) valid, " << set.rejected.size() << " rejected\n";
            for (const auto& w : set.warnings) std::cout << "warning: " << w << "\n";
            for (const auto& r : set.rejected) {
                std::cout << "rejected " << r.position << ": " << to_string(r.code) << ": " << r.message << "\n";
            }
            return set.rejected.empty() ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
