#pragma once

#include "ppcheck/dataset.hpp"

#include <doctest.h>

#include <random>
#include <vector>

namespace ppc::test {

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

/// Target-only dataset around a given y vector.
inline Dataset y_only(Eigen::VectorXd y, std::string name = "d") {
    return Dataset(std::move(name), {Column::real("y", std::move(y))}, "y");
}

/// The running example: binary group feature g plus target y.
inline Dataset grouped(Eigen::VectorXd g, Eigen::VectorXd y) {
    return Dataset("d", {Column::integer("g", std::move(g)), Column::real("y", std::move(y))},
                   "y");
}

inline ModelSampleSet samples_of(std::vector<Eigen::VectorXd> replicates,
                                 std::string model_id = "model") {
    ModelSampleSet s;
    s.model_id = std::move(model_id);
    s.replicates = std::move(replicates);
    return s;
}

inline bool close_rel(double a, double b, double rel) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= rel * scale;
}

#define CHECK_ERRC(expr, errc)                                                                     \
    do {                                                                                           \
        try {                                                                                      \
            (void)(expr);                                                                          \
            FAIL_CHECK("expected " #errc ", nothing was thrown");                                  \
        } catch (const ppc::Error& e) {                                                            \
            CHECK(e.code() == (errc));                                                             \
        }                                                                                          \
    } while (0)

} // namespace ppc::test
