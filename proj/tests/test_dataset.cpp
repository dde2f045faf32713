#include "ppcheck/dataset.hpp"

#include "ppcheck/rng.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace ppc;
using test::vec;

namespace {

const char* kRadonCsv =
    "floor,uppm,radon\n"
    "0,0.83,1.1\n"
    "1,1.2,2.3\n"
    "0,0.4,0.9\n";

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("ppcheck_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("csv ingestion infers types and validates") {
    const Dataset d = dataset_from_csv(kRadonCsv, "radon", "radon");
    CHECK(d.n_rows() == 3);
    CHECK(d.columns().size() == 3);
    CHECK(d.column("floor").type == ColumnType::Integer);
    CHECK(d.column("uppm").type == ColumnType::Real);
    CHECK(d.column("radon").type == ColumnType::Real);
    CHECK(d.target_values()[1] == 2.3);
}

TEST_CASE("ingestion error variants name the offender") {
    SUBCASE("missing value") {
        try {
            dataset_from_csv("a,b\n1,\n", "d", "a");
            FAIL("expected MissingValue");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MissingValue);
            CHECK(std::string(e.what()).find("'b'") != std::string::npos);
            CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        }
    }
    SUBCASE("categorical target") {
        CHECK_ERRC(dataset_from_csv("a,b\n1,x\n2,y\n", "d", "b"), Errc::TargetNotNumeric);
    }
    SUBCASE("ragged row") {
        CHECK_ERRC(dataset_from_csv("a,b\n1,2\n3\n", "d", "a"), Errc::RaggedRow);
    }
    SUBCASE("missing target column") {
        CHECK_ERRC(dataset_from_csv("a,b\n1,2\n", "d", "z"), Errc::MissingTargetColumn);
    }
    SUBCASE("non-finite numeric") {
        CHECK_ERRC(dataset_from_csv("a\nnan\n", "d", "a"), Errc::NonFiniteValue);
        CHECK_ERRC(dataset_from_csv("a\ninf\n", "d", "a"), Errc::NonFiniteValue);
    }
    SUBCASE("duplicate and empty column names") {
        CHECK_ERRC(dataset_from_csv("a,a\n1,2\n", "d", "a"), Errc::DuplicateColumn);
        CHECK_ERRC(dataset_from_csv("a,\n1,2\n", "d", "a"), Errc::EmptyColumnName);
    }
    SUBCASE("header only") {
        CHECK_ERRC(dataset_from_csv("a,b\n", "d", "a"), Errc::EmptyDataset);
    }
    SUBCASE("missing file") {
        CHECK_ERRC(load_dataset("/nonexistent/american_radon.csv", "radon"), Errc::MissingFile);
    }
}

TEST_CASE("boolean and categorical inference with quoting") {
    const Dataset d = dataset_from_csv("flag,label,y\ntrue,\"a,b\",1\nfalse,plain,2\n", "d", "y");
    CHECK(d.column("flag").type == ColumnType::Boolean);
    CHECK(d.column("label").type == ColumnType::Categorical);
    CHECK(d.column("label").label_at(0) == "a,b");
    CHECK(d.column("flag").flags == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("csv round-trip is the identity") {
    Rng rng(123);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform_index(30));
        Eigen::VectorXd reals(n), ints(n);
        std::vector<std::string> cats(static_cast<std::size_t>(n));
        std::vector<std::uint8_t> flags(static_cast<std::size_t>(n));
        static const char* labels[] = {"clay", "lo am", "x\"quote", "d,comma", ""};
        for (Eigen::Index i = 0; i < n; ++i) {
            reals[i] = rng.normal() * std::pow(10.0, static_cast<double>(rng.uniform_index(7)) - 3.0);
            ints[i] = static_cast<double>(static_cast<long long>(rng.bits() % 2000001) - 1000000);
            cats[static_cast<std::size_t>(i)] = labels[rng.uniform_index(4)];
            flags[static_cast<std::size_t>(i)] = rng.uniform01() < 0.5 ? 1 : 0;
        }
        const Dataset d("roundtrip",
                        {Column::real("value", reals), Column::integer("kount", ints),
                         Column::categorical("label", cats), Column::boolean("flag", flags)},
                        "value");
        const Dataset back = dataset_from_csv(dataset_to_csv(d), "roundtrip", "value");
        CHECK(back == d);
    }
}

TEST_CASE("json dataset form mirrors columns") {
    const Dataset d = dataset_from_csv(kRadonCsv, "radon", "radon");
    const Dataset back = dataset_from_json(dataset_to_json(d), "radon", "radon");
    CHECK(back == d);
    // target can come from the document itself
    const Dataset self_target = dataset_from_json(dataset_to_json(d), "radon", "");
    CHECK(self_target.target() == "radon");
}

TEST_CASE("model sample ingestion") {
    SUBCASE("json replicates") {
        const auto s = samples_from_json(
            nlohmann::ordered_json::parse(R"({"model_id":"m1","replicates":[[1,2,3,4],[5,6,7,8]]})"));
        CHECK(s.m() == 2);
        CHECK(s.model_id == "m1");
        CHECK(s.replicates[1][3] == 8.0);
    }
    SUBCASE("wide csv, one replicate per row") {
        const auto s = samples_from_csv("1,2,3,4\n5,6,7,8\n");
        CHECK(s.m() == 2);
        CHECK(s.replicates[0].size() == 4);
    }
    SUBCASE("length mismatch") {
        CHECK_ERRC(samples_from_csv("1,2,3,4\n5,6,7\n"), Errc::ReplicateLengthMismatch);
    }
    SUBCASE("non-finite sample") {
        CHECK_ERRC(samples_from_csv("1,NaN,3\n"), Errc::NonFiniteSample);
        CHECK_ERRC(samples_from_json(nlohmann::ordered_json::parse(
                       R"({"model_id":"m","replicates":[[1,"NaN",3]]})")),
                   Errc::NonFiniteSample);
    }
    SUBCASE("empty set") {
        CHECK_ERRC(samples_from_csv(""), Errc::EmptySampleSet);
    }
    SUBCASE("json round-trip") {
        const auto s = samples_from_csv("1.5,2.25\n-3,0.125\n");
        const auto back = samples_from_json(samples_to_json(s));
        CHECK(back.replicates == s.replicates);
    }
}

TEST_CASE("alignment validation") {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(100);
    const Dataset d = test::y_only(y);
    CHECK_NOTHROW(validate_alignment(d, test::samples_of({Eigen::VectorXd::Zero(100)})));
    CHECK_ERRC(validate_alignment(d, test::samples_of({Eigen::VectorXd::Zero(99)})),
               Errc::AlignmentError);
    CHECK_ERRC(validate_alignment(d, test::samples_of({})), Errc::EmptySampleSet);
}

TEST_CASE("metadata sidecar") {
    TempDir tmp;
    const auto path = tmp.path / "meta.json";
    std::ofstream(path) << R"({"description":"radon study","columns":{"floor":"0 basement"}})";
    const DatasetMetadata meta = load_metadata(path);
    CHECK(meta.description == "radon study");
    CHECK(meta.column_descriptions.at("floor") == "0 basement");

    const Dataset d = dataset_from_csv(kRadonCsv, "radon", "radon");
    CHECK_NOTHROW(validate_metadata(meta, d));
    DatasetMetadata bad = meta;
    bad.column_descriptions["basement2"] = "absent";
    CHECK_ERRC(validate_metadata(bad, d), Errc::UnknownColumnDescription);
}

TEST_CASE("file save and load through the canonical format") {
    TempDir tmp;
    const Dataset d = dataset_from_csv(kRadonCsv, "data", "radon");
    const auto csv_path = tmp.path / "data.csv";
    save_dataset(d, csv_path);
    CHECK(load_dataset(csv_path, "radon") == d);

    const auto samples = test::samples_of({vec({1, 2, 3}), vec({4, 5, 6})}, "m");
    const auto sample_path = tmp.path / "samples.json";
    save_samples(samples, sample_path);
    const auto back = load_samples(sample_path);
    CHECK(back.model_id == "m");
    CHECK(back.replicates == samples.replicates);
}

TEST_CASE("with_target_values swaps only the target") {
    const Dataset d = dataset_from_csv(kRadonCsv, "radon", "radon");
    const Dataset swapped = d.with_target_values(vec({9, 9, 9}));
    CHECK(swapped.target_values() == vec({9, 9, 9}));
    CHECK(swapped.column("floor").values == d.column("floor").values);
    CHECK_ERRC(d.with_target_values(vec({1, 2})), Errc::AlignmentError);
}
