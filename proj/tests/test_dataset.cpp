#include <doctest.h>

#include <fstream>

#include "csichart/dataset.hpp"
#include "csichart/errors.hpp"
#include "csichart/random.hpp"

using namespace csichart;
namespace fs = std::filesystem;

namespace {

Dataset sample_data(bool with_positions)
{
    Rng rng(3);
    Dataset d;
    d.scene.seed = 17;
    d.scene.snr_db = 12.5;
    d.pipeline_version = "test-pipeline";
    d.features.resize(6, 9);
    for (Eigen::Index i = 0; i < d.features.size(); ++i)
        d.features.data()[i] = rng.normal() * 1e3;
    d.features(0, 0) = -0.0;
    d.features(1, 0) = 5e-324;
    d.has_positions = with_positions;
    d.positions = Eigen::MatrixXd::Zero(2, with_positions ? 9 : 0);
    if (with_positions)
        for (Eigen::Index i = 0; i < d.positions.size(); ++i)
            d.positions.data()[i] = rng.uniform(-100.0, 100.0);
    d.anchored = with_positions ? sample_anchor_mask(9, 0.5, 1) : std::vector<std::uint8_t>(9, 0);
    d.trace_id = {-1, 0, 0, 1, 1, 1, 2, -1, 3};
    return d;
}

fs::path temp(const std::string &name) { return fs::temp_directory_path() / ("csichart_ds_" + name); }

} // namespace

TEST_CASE("anchor masks")
{
    const auto m10 = sample_anchor_mask(2000, 0.1, 5);
    const auto m50 = sample_anchor_mask(2000, 0.5, 5);
    std::size_t c10 = 0, c50 = 0;
    for (std::size_t i = 0; i < 2000; ++i) {
        c10 += m10[i];
        c50 += m50[i];
        if (m10[i])
            CHECK(m50[i]);
    }
    CHECK(c10 == 200);
    CHECK(c50 == 1000);
    CHECK(sample_anchor_mask(10, 1.0, 1) == std::vector<std::uint8_t>(10, 1));
    CHECK(sample_anchor_mask(10, 0.0, 1) == std::vector<std::uint8_t>(10, 0));
    CHECK(sample_anchor_mask(100, 0.3, 2) == sample_anchor_mask(100, 0.3, 2));
    CHECK_THROWS_AS(sample_anchor_mask(10, 1.5, 1), InvalidConfig);
}

TEST_CASE("dataset round trip is bit exact")
{
    for (bool with_positions : {true, false}) {
        const auto d = sample_data(with_positions);
        const auto path = temp("rt.ds");
        save_dataset(path, d);
        const auto back = load_dataset(path);
        CHECK(back == d);
        CHECK(std::signbit(back.features(0, 0)));
        CHECK(back.features(1, 0) == 5e-324);
        CHECK(std::isinf(sample_data(true).scene.snr_db) == std::isinf(back.scene.snr_db));
        fs::remove(path);
    }
}

TEST_CASE("infinite SNR survives the header")
{
    auto d = sample_data(true);
    d.scene.snr_db = std::numeric_limits<double>::infinity();
    const auto path = temp("inf.ds");
    save_dataset(path, d);
    CHECK(load_dataset(path) == d);
    fs::remove(path);
}

TEST_CASE("damaged dataset files")
{
    const auto d = sample_data(true);
    const auto path = temp("bad.ds");
    save_dataset(path, d);
    SUBCASE("truncated")
    {
        fs::resize_file(path, fs::file_size(path) - 1);
        CHECK_THROWS_AS(load_dataset(path), IoError);
    }
    SUBCASE("wrong magic")
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.put('Z');
        f.close();
        CHECK_THROWS_AS(load_dataset(path), IoError);
    }
    SUBCASE("trailing bytes")
    {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.put('x');
        f.close();
        CHECK_THROWS_AS(load_dataset(path), IoError);
    }
    fs::remove(path);
}

TEST_CASE("dataset validation and subsets")
{
    auto d = sample_data(true);
    CHECK_NOTHROW(d.validate());
    const auto idx = d.anchored_indices();
    CHECK(idx.size() == d.anchor_count());
    const auto s = d.subset(idx);
    CHECK(s.size() == idx.size());
    CHECK(s.anchor_count() == s.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        CHECK(s.features.col(static_cast<Eigen::Index>(k)) == d.features.col(static_cast<Eigen::Index>(idx[k])));
        CHECK(s.trace_id[k] == d.trace_id[idx[k]]);
    }

    auto bad = d;
    bad.trace_id.pop_back();
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    bad = sample_data(false);
    bad.anchored[0] = 1;
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    bad = d;
    bad.features(2, 2) = std::nan("");
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("CSV export")
{
    const auto d = sample_data(true);
    const auto path = temp("export.csv");
    export_dataset_csv(path, d);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "index,trace_id,anchored,pos_0,pos_1,f0,f1,f2,f3,f4,f5");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 9);
    fs::remove(path);
}
