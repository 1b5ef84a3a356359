#include "embproj/bookmark.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace embproj;
using testutil::to_matrix;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::NotFound;
}

Bookmark tsne_bookmark(const std::string& fp, Matrix coords) {
    Bookmark b;
    b.label = "tsne view";
    b.dataset_fingerprint = fp;
    TsneParams p;
    p.perplexity = 7.5;
    p.seed = 12345678901234ULL;
    b.projection = TsneView{p, 300, std::move(coords)};
    b.selection = {0, 2};
    b.color_column = "group";
    b.camera = {{0.1, -2.0, 3.0}, {0.0, 0.0, 0.0}, 1.75};
    return b;
}

Bookmark custom_bookmark(const std::string& fp) {
    Bookmark b;
    b.label = "good/bad, \"quoted\" ünïcode";
    b.dataset_fingerprint = fp;
    b.projection = CustomView{{{"good", MatchMode::Substring}, {"bad", MatchMode::Substring}},
                              {{"^a.*", MatchMode::Regex}, {"z$", MatchMode::Regex}},
                              AxisSpec{{"x", MatchMode::Substring}, {"y", MatchMode::Regex}}};
    b.label_column = "word";
    return b;
}

} // namespace

TEST(Bookmarks, EmptyList) {
    EXPECT_EQ(render_bookmarks({}), "{\"bookmarks\":[],\"version\":1}\n");
    const auto set = parse_bookmarks("{\"version\":1,\"bookmarks\":[]}");
    EXPECT_TRUE(set.bookmarks.empty());
    EXPECT_TRUE(set.rejected.empty());
}

TEST(Bookmarks, CanonicalRealsAndKeyOrder) {
    EXPECT_EQ(canonical_dump(json{{"b", 1.0}, {"a", 0.1}, {"c", -2.5e-300}}),
              "{\"a\":0.10000000000000001,\"b\":1.0,\"c\":-2.5e-300}");
    EXPECT_EQ(canonical_dump(json{{"n", 3}, {"s", "x"}}), "{\"n\":3,\"s\":\"x\"}");
    EXPECT_EQ(code_of([] { canonical_dump(json(std::numeric_limits<double>::quiet_NaN())); }),
              ErrorCode::InvalidArgument);
}

TEST(Bookmarks, RoundTripIsByteIdentical) {
    std::mt19937_64 rng(4);
    const Matrix coords = to_matrix(oracle::gaussian_rows(5, 2, rng, 1e-3));
    Bookmark pca;
    pca.label = "pca";
    pca.dataset_fingerprint = "sha256:ab";
    pca.projection = PcaView{{2, 0, 5}};
    pca.subset = {1, 3};
    const std::vector<Bookmark> marks{tsne_bookmark("sha256:ab", coords), custom_bookmark("sha256:ab"), pca};
    const std::string first = render_bookmarks(marks);
    const auto set = parse_bookmarks(first);
    ASSERT_TRUE(set.rejected.empty());
    ASSERT_EQ(set.bookmarks.size(), 3u);
    EXPECT_EQ(set.bookmarks, marks);
    EXPECT_EQ(render_bookmarks(set.bookmarks, set.extra), first);
    const auto& view = std::get<TsneView>(set.bookmarks[0].projection);
    EXPECT_TRUE(identical(view.coords, coords));
    EXPECT_EQ(first.back(), '\n');
    EXPECT_EQ(first.find('\n'), first.size() - 1);
}

TEST(Bookmarks, ExtremeRealsSurvive) {
    Matrix coords(3, 2);
    coords << std::numeric_limits<double>::denorm_min(), -0.0, std::numeric_limits<double>::max(),
        std::numeric_limits<double>::lowest(), 1.0 / 3.0, 123456789.0;
    const std::vector<Bookmark> marks{tsne_bookmark("fp", coords)};
    const auto text = render_bookmarks(marks);
    const auto back = parse_bookmarks(text);
    ASSERT_EQ(back.bookmarks.size(), 1u);
    EXPECT_TRUE(identical(std::get<TsneView>(back.bookmarks[0].projection).coords, coords));
    EXPECT_EQ(render_bookmarks(back.bookmarks), text);
}

TEST(Bookmarks, UnknownKeysArePreserved) {
    const std::string text =
        R"({"version":1,"zz_file":{"k":[1,2]},"bookmarks":[{"schema_version":1,"dataset_fingerprint":"fp",)"
        R"("projection":{"kind":"pca","axes":[0,1]},"future_field":"keep me"}]})";
    const auto set = parse_bookmarks(text);
    ASSERT_EQ(set.bookmarks.size(), 1u);
    EXPECT_EQ(set.bookmarks[0].extra.at("future_field"), "keep me");
    const auto out = render_bookmarks(set.bookmarks, set.extra);
    EXPECT_NE(out.find("\"future_field\":\"keep me\""), std::string::npos);
    EXPECT_NE(out.find("\"zz_file\":{\"k\":[1,2]}"), std::string::npos);
    EXPECT_EQ(render_bookmarks(parse_bookmarks(out).bookmarks, parse_bookmarks(out).extra), out);
}

TEST(Bookmarks, FileLevelErrors) {
    EXPECT_EQ(code_of([] { parse_bookmarks("{not json"); }), ErrorCode::MalformedFile);
    EXPECT_EQ(code_of([] { parse_bookmarks("[]"); }), ErrorCode::MalformedFile);
    EXPECT_EQ(code_of([] { parse_bookmarks("{\"bookmarks\":[]}"); }), ErrorCode::MalformedFile);
    EXPECT_EQ(code_of([] { parse_bookmarks("{\"version\":2,\"bookmarks\":[]}"); }), ErrorCode::UnsupportedVersion);
    EXPECT_EQ(code_of([] { parse_bookmarks("{\"version\":1,\"bookmarks\":{}}"); }), ErrorCode::MalformedFile);
}

TEST(Bookmarks, BadBookmarksAreRejectedIndividually) {
    const std::string text = R"({"version":1,"bookmarks":[)"
                             R"({"schema_version":1,"dataset_fingerprint":"fp","projection":{"kind":"pca","axes":[0,1]}},)"
                             R"({"schema_version":9,"dataset_fingerprint":"fp","projection":{"kind":"pca","axes":[0]}},)"
                             R"({"schema_version":1,"dataset_fingerprint":"fp","projection":{"kind":"umap"}},)"
                             R"({"schema_version":1,"projection":{"kind":"pca","axes":[0,1]}},)"
                             R"(42]})";
    const auto set = parse_bookmarks(text);
    EXPECT_EQ(set.bookmarks.size(), 1u);
    ASSERT_EQ(set.rejected.size(), 4u);
    EXPECT_EQ(set.rejected[0].position, 1u);
    EXPECT_EQ(set.rejected[0].code, ErrorCode::UnsupportedVersion);
    EXPECT_EQ(set.rejected[1].code, ErrorCode::MalformedFile);
    EXPECT_EQ(set.rejected[2].code, ErrorCode::MalformedFile);
    EXPECT_EQ(set.rejected[3].position, 4u);
}

TEST(Bookmarks, CheckedAgainstDataset) {
    auto ds = make_dataset("0\t0\n1\t0\n0\t1\n", std::nullopt);
    const Matrix three = to_matrix({{0, 0}, {1, 1}, {2, 2}});
    const Matrix two = to_matrix({{0, 0}, {1, 1}});

    Bookmark wrong_rows = tsne_bookmark(ds->fingerprint(), two);
    Bookmark subset_ok = tsne_bookmark(ds->fingerprint(), two);
    subset_ok.subset = {0, 2};
    Bookmark stale = tsne_bookmark("sha256:old", three);
    Bookmark bad_selection = custom_bookmark(ds->fingerprint());
    bad_selection.selection = {3};

    const std::vector<Bookmark> same{wrong_rows, subset_ok, bad_selection};
    auto set = parse_bookmarks(render_bookmarks(same), ds.get());
    ASSERT_EQ(set.bookmarks.size(), 1u);
    EXPECT_EQ(set.bookmarks[0].subset, (std::vector<Index>{0, 2}));
    ASSERT_EQ(set.rejected.size(), 2u);
    EXPECT_EQ(set.rejected[0].code, ErrorCode::RowCountMismatch);
    EXPECT_EQ(set.rejected[1].code, ErrorCode::IndexOutOfRange);
    EXPECT_TRUE(set.warnings.empty());

    const std::vector<Bookmark> other{stale};
    set = parse_bookmarks(render_bookmarks(other), ds.get());
    EXPECT_EQ(set.bookmarks.size(), 1u);
    EXPECT_EQ(set.warnings.size(), 1u);
}

TEST(Bookmarks, MixedDatasetsRefused) {
    const std::vector<Bookmark> marks{custom_bookmark("a"), custom_bookmark("b")};
    EXPECT_EQ(code_of([&] { render_bookmarks(marks); }), ErrorCode::MixedDatasets);
}

TEST(Bookmarks, SaveAndLoadFile) {
    testutil::TempDir dir;
    const std::vector<Bookmark> marks{custom_bookmark("fp")};
    const auto path = dir.path() / "marks.json";
    save_bookmarks(marks, path);
    const auto set = load_bookmarks(path);
    EXPECT_EQ(set.bookmarks, marks);
    EXPECT_EQ(read_file(path), render_bookmarks(marks));
    EXPECT_EQ(code_of([&] { load_bookmarks(dir.path() / "missing.json"); }), ErrorCode::IoError);
}
