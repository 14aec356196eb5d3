#include <doctest.h>

#include <filesystem>
#include <string>

#include "lhalf/csv_io.hpp"
#include "oracles.hpp"

using namespace lhalf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("lhalf_csv_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("format_number round trips doubles") {
    Rng rng(3);
    for (int t = 0; t < 2000; ++t) {
        const double v = rng.gaussian() * std::pow(10.0, rng.uniform(-300.0, 300.0));
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(std::stod(format_number(0.1)) == 0.1);
    CHECK(std::stod(format_number(-0.0)) == 0.0);
}

TEST_CASE("matrix and vector files round trip exactly") {
    const fs::path dir = scratch_dir("roundtrip");
    const DenseMatrix a = oracle::random_matrix(7, 11, 9, 1e-3);
    const DenseVector v = oracle::random_vector(13, 2, 1e5);
    write_matrix_csv(dir / "a.csv", a);
    write_vector_csv(dir / "v.csv", v);
    const DenseMatrix a2 = read_matrix_csv(dir / "a.csv");
    const DenseVector v2 = read_vector_csv(dir / "v.csv");
    REQUIRE(a2.rows() == 7);
    REQUIRE(a2.cols() == 11);
    CHECK(a2.entries().size() == a.entries().size());
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 11; ++j) CHECK(a2(i, j) == a(i, j));
    CHECK(v2.values() == v.values());
    fs::remove_all(dir);
}

TEST_CASE("parsing") {
    const DenseMatrix m = parse_matrix_csv("1,2,3\n4,5,6\n");
    CHECK(m.rows() == 2);
    CHECK(m(1, 2) == 6.0);
    CHECK(parse_matrix_csv("1, 2\r\n3 ,4").cols() == 2);
    CHECK(parse_vector_csv("1\n2\n3\n").size() == 3);
    CHECK(parse_vector_csv("1,2,3").size() == 3);
}

TEST_CASE("parse errors carry a location") {
    auto message = [](auto&& fn) {
        try {
            fn();
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message([] { parse_matrix_csv("1,2\n3,x\n", "m.csv"); }).rfind("m.csv:2:", 0) == 0);
    CHECK(message([] { parse_matrix_csv("1,2\n3\n", "m.csv"); }).rfind("m.csv:2:", 0) == 0);
    CHECK(message([] { parse_vector_csv("1,2\n3,4\n", "v.csv"); }).rfind("v.csv:", 0) == 0);
    CHECK_THROWS_AS(parse_matrix_csv(""), ParseError);
    CHECK_THROWS_AS(read_matrix_csv("/nonexistent/lhalf/a.csv"), IoError);
}
