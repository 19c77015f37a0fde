#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "zsl/dataset.hpp"
#include "zsl/errors.hpp"
#include "zsl/npy.hpp"
#include "zsl/rng.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SynthConfig small_synth() {
    SynthConfig cfg;
    cfg.attr_dim = 6;
    cfg.feature_dim = 12;
    cfg.seen_classes = 4;
    cfg.unseen_classes = 2;
    cfg.samples_per_class = 10;
    cfg.noise_sigma = 0.05;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("npy round-trips are bit exact at both precisions") {
    Rng rng(1);
    Matrix m(7, 5);
    for (double& v : m.data) v = rng.uniform(-10.0, 10.0);
    const fs::path dir = fresh_dir("zsl_npy_test");

    SUBCASE("f64") {
        const fs::path p = dir / "m64.npy";
        write_npy(p.string(), m, NpyDtype::f64);
        NpyDtype dtype;
        const Matrix back = read_npy(p.string(), &dtype);
        CHECK(dtype == NpyDtype::f64);
        REQUIRE(back.rows == 7);
        REQUIRE(back.cols == 5);
        for (std::size_t i = 0; i < m.data.size(); ++i) CHECK(back.data[i] == m.data[i]);
        // Write-again byte identity.
        const fs::path p2 = dir / "m64b.npy";
        write_npy(p2.string(), back, NpyDtype::f64);
        CHECK(file_bytes(p) == file_bytes(p2));
    }
    SUBCASE("f32 stored precision") {
        const fs::path p = dir / "m32.npy";
        write_npy(p.string(), m, NpyDtype::f32);
        NpyDtype dtype;
        const Matrix back = read_npy(p.string(), &dtype);
        CHECK(dtype == NpyDtype::f32);
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            CHECK(back.data[i] == static_cast<double>(static_cast<float>(m.data[i])));
        }
        const fs::path p2 = dir / "m32b.npy";
        write_npy(p2.string(), back, NpyDtype::f32);
        CHECK(file_bytes(p) == file_bytes(p2));
    }
    fs::remove_all(dir);
}

TEST_CASE("npy reader accepts numpy's own output header layout") {
    // Exact bytes numpy 1.x writes for np.zeros((2,3), '<f8').
    const fs::path dir = fresh_dir("zsl_npy_numpy");
    const fs::path p = dir / "np.npy";
    {
        std::ofstream out(p, std::ios::binary);
        const std::string header =
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }";
        std::string padded = header;
        padded.append(118 - 10 - header.size(), ' ');
        padded.push_back('\n');
        out.write("\x93NUMPY\x01\x00", 8);
        const std::uint16_t len = static_cast<std::uint16_t>(padded.size());
        out.write(reinterpret_cast<const char*>(&len), 2);
        out.write(padded.data(), static_cast<std::streamsize>(padded.size()));
        const double zeros[6] = {0, 0, 0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(zeros), sizeof(zeros));
    }
    const Matrix m = read_npy(p.string());
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    for (double v : m.data) CHECK(v == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("npy reader rejects malformed files") {
    const fs::path dir = fresh_dir("zsl_npy_bad");
    const fs::path p = dir / "bad.npy";
    SUBCASE("bad magic") {
        std::ofstream(p, std::ios::binary) << "NOTNUMPYDATA";
        CHECK_THROWS_WITH_AS(read_npy(p.string()), doctest::Contains("magic"), FormatError);
    }
    SUBCASE("fortran order") {
        Matrix m(1, 1, 0.5);
        write_npy(p.string(), m, NpyDtype::f64);
        std::string bytes = file_bytes(p);
        const auto pos = bytes.find("False");
        bytes.replace(pos, 5, "True ");
        std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_WITH_AS(read_npy(p.string()), doctest::Contains("fortran"), FormatError);
    }
    SUBCASE("unsupported dtype") {
        Matrix m(1, 1, 0.5);
        write_npy(p.string(), m, NpyDtype::f64);
        std::string bytes = file_bytes(p);
        const auto pos = bytes.find("<f8");
        bytes.replace(pos, 3, "<i4");
        std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_WITH_AS(read_npy(p.string()), doctest::Contains("descr"), FormatError);
    }
    SUBCASE("truncated data") {
        Matrix m(4, 4, 1.0);
        write_npy(p.string(), m, NpyDtype::f64);
        const std::string bytes = file_bytes(p);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
        out.close();
        CHECK_THROWS_WITH_AS(read_npy(p.string()), doctest::Contains("truncated"), FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("synth generation is deterministic with the configured shape") {
    const SynthConfig cfg = small_synth();
    const ZslDataset a = synth_generate(cfg);
    const ZslDataset b = synth_generate(cfg);

    CHECK(a.features.rows == 60);   // (4+2) classes * 10
    CHECK(a.features.cols == 12);
    CHECK(a.attributes.rows == 6);
    CHECK(a.attributes.cols == 6);
    CHECK(a.split.seen_classes == std::vector<int>{0, 1, 2, 3});
    CHECK(a.split.unseen_classes == std::vector<int>{4, 5});
    CHECK(a.split.train_idx.size() == 4 * 8);
    CHECK(a.split.test_seen_idx.size() == 4 * 2);
    CHECK(a.split.test_unseen_idx.size() == 2 * 10);

    for (std::size_t i = 0; i < a.features.data.size(); ++i) {
        CHECK(a.features.data[i] == b.features.data[i]);
    }
    for (std::size_t i = 0; i < a.attributes.data.size(); ++i) {
        CHECK(a.attributes.data[i] == b.attributes.data[i]);
    }
    CHECK(a.split.train_idx == b.split.train_idx);
}

TEST_CASE("synth with zero noise collapses classes to their means") {
    SynthConfig cfg = small_synth();
    cfg.noise_sigma = 0.0;
    const ZslDataset ds = synth_generate(cfg);
    for (std::size_t c = 0; c < 6; ++c) {
        const double* first = ds.features.row(c * 10);
        for (std::size_t s = 1; s < 10; ++s) {
            const double* row = ds.features.row(c * 10 + s);
            for (std::size_t j = 0; j < ds.features.cols; ++j) CHECK(row[j] == first[j]);
        }
    }
}

TEST_CASE("synth counting oracle for the acceptance shape") {
    SynthConfig cfg;
    cfg.attr_dim = 16;
    cfg.feature_dim = 64;
    cfg.seen_classes = 20;
    cfg.unseen_classes = 5;
    cfg.samples_per_class = 100;
    cfg.seed = 7;
    const ZslDataset ds = synth_generate(cfg);
    CHECK(ds.features.rows == 2500);
    CHECK(ds.features.cols == 64);
    CHECK(ds.attributes.rows == 25);
    CHECK(ds.attributes.cols == 16);
}

TEST_CASE("synth rejects invalid configurations") {
    SynthConfig cfg = small_synth();
    cfg.seen_classes = 0;
    CHECK_THROWS_WITH_AS(synth_generate(cfg), doctest::Contains("seen_classes"), ConfigError);
    cfg = small_synth();
    cfg.feature_dim = 2;
    CHECK_THROWS_WITH_AS(synth_generate(cfg), doctest::Contains("feature_dim"), ConfigError);
}

TEST_CASE("dataset directory round-trip preserves features bit exactly") {
    const ZslDataset ds = synth_generate(small_synth());
    const fs::path dir = fresh_dir("zsl_ds_roundtrip");
    save_dataset(ds, dir.string());
    const ZslDataset back = load_dataset(dir.string());
    REQUIRE(back.features.rows == ds.features.rows);
    for (std::size_t i = 0; i < ds.features.data.size(); ++i) {
        CHECK(back.features.data[i] == ds.features.data[i]);
    }
    CHECK(back.labels == ds.labels);
    CHECK(back.split.seen_classes == ds.split.seen_classes);
    CHECK(back.split.unseen_classes == ds.split.unseen_classes);
    CHECK(back.split.train_idx == ds.split.train_idx);
    CHECK(back.split.test_seen_idx == ds.split.test_seen_idx);
    CHECK(back.split.test_unseen_idx == ds.split.test_unseen_idx);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset accepts headered CSV matrices") {
    const fs::path dir = fresh_dir("zsl_ds_csv");
    std::ofstream(dir / "features.csv") << "f0,f1\n1.0,2.0\n3.0,4.0\n";
    std::ofstream(dir / "attributes.csv") << "a0,a1\n0.1,0.2\n0.3,0.4\n";
    std::ofstream(dir / "labels.txt") << "0\n1\n";
    std::ofstream(dir / "split.json")
        << R"({"seen": [0], "unseen": [1], "train": [0], "test_seen": [], "test_unseen": [1]})";
    const ZslDataset ds = load_dataset(dir.string());
    CHECK(ds.features(1, 1) == 4.0);
    CHECK(ds.attributes(0, 1) == 0.2);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects invariant violations naming the row") {
    const fs::path dir = fresh_dir("zsl_ds_invalid");
    const ZslDataset ds = synth_generate(small_synth());
    save_dataset(ds, dir.string());

    SUBCASE("label out of range") {
        std::ofstream out(dir / "labels.txt");
        for (std::size_t i = 0; i < ds.labels.size(); ++i) {
            out << (i == 5 ? 6 : ds.labels[i]) << "\n";  // class 6 of classes [0,6)
        }
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("row 5"),
                             FormatError);
    }
    SUBCASE("overlapping seen and unseen sets") {
        std::ofstream out(dir / "split.json");
        out << R"({"seen": [0, 1, 2, 3], "unseen": [3, 4, 5], "train": [], "test_seen": [],)"
            << R"( "test_unseen": []})";
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("both seen"),
                             FormatError);
    }
    SUBCASE("attribute outside the unit interval") {
        Matrix attrs = ds.attributes;
        attrs(2, 1) = 1.5;
        write_npy((dir / "attributes.npy").string(), attrs, NpyDtype::f64);
        CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("row 2"),
                             FormatError);
    }
    SUBCASE("missing file") {
        fs::remove(dir / "labels.txt");
        CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("labels.txt"),
                             FormatError);
    }
    SUBCASE("train index carrying an unseen class") {
        std::ofstream out(dir / "split.json");
        out << R"({"seen": [0,1,2,3], "unseen": [4,5], "train": [41], "test_seen": [],)"
            << R"( "test_unseen": []})";  // row 41 belongs to class 4
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("train"),
                             FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("pk batches have exactly K samples from each of P classes") {
    const ZslDataset ds = synth_generate(small_synth());
    PkBatcher batcher(ds, 2, 3, 99);
    const auto batches = batcher.next_epoch();
    REQUIRE(!batches.empty());
    std::set<std::size_t> seen_indices;
    for (const auto& batch : batches) {
        CHECK(batch.size() == 6);
        std::map<int, std::size_t> counts;
        for (std::size_t i : batch) {
            counts[ds.labels[i]] += 1;
            CHECK(seen_indices.insert(i).second);  // without replacement within the epoch
        }
        CHECK(counts.size() == 2);
        for (const auto& [cls, count] : counts) CHECK(count == 3);
    }
}

TEST_CASE("pk batching covers a 2x2 set in a single batch") {
    ZslDataset ds;
    ds.features = Matrix(4, 2, 0.0);
    ds.labels = {0, 0, 1, 1};
    ds.attributes = Matrix(2, 2, 0.5);
    ds.split.seen_classes = {0, 1};
    ds.split.train_idx = {0, 1, 2, 3};
    PkBatcher batcher(ds, 2, 2, 1);
    const auto batches = batcher.next_epoch();
    REQUIRE(batches.size() == 1);
    std::set<std::size_t> all(batches[0].begin(), batches[0].end());
    CHECK(all == std::set<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("pk batching is deterministic and rejects infeasible configs") {
    const ZslDataset ds = synth_generate(small_synth());
    PkBatcher a(ds, 2, 2, 7);
    PkBatcher b(ds, 2, 2, 7);
    CHECK(a.next_epoch() == b.next_epoch());
    CHECK(a.next_epoch() == b.next_epoch());  // later epochs stay in lockstep

    CHECK_THROWS_AS(PkBatcher(ds, 5, 2, 1), ConfigError);   // only 4 seen classes
    CHECK_THROWS_AS(PkBatcher(ds, 2, 9, 1), ConfigError);   // classes have 8 train rows
    CHECK_THROWS_AS(PkBatcher(ds, 1, 2, 1), ConfigError);
}
