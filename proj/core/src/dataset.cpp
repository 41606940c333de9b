#include "riskquant/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "riskquant/errors.hpp"

namespace riskquant {

void Dataset::validate() const {
    if (y.size() != x.rows()) {
        throw InputError("response length does not match feature rows");
    }
    if (alpha_col && alpha_col->size() != x.rows()) {
        throw InputError("alpha column length does not match feature rows");
    }
    if (y_twin && y_twin->size() != x.rows()) {
        throw InputError("twin response length does not match feature rows");
    }
    if (alpha_col) {
        for (Eigen::Index i = 0; i < alpha_col->size(); ++i) {
            double a = (*alpha_col)(i);
            if (!(a > 0.0 && a < 1.0)) {
                throw InputError("alpha column entries must lie in (0, 1)");
            }
        }
    }
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        out << "x_" << j << ",";
    }
    out << "y";
    if (data.alpha_col) out << ",alpha";
    if (data.y_twin) out << ",y_twin";
    out << "\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            put(data.x(i, j));
            out << ",";
        }
        put(data.y(i));
        if (data.alpha_col) {
            out << ",";
            put((*data.alpha_col)(i));
        }
        if (data.y_twin) {
            out << ",";
            put((*data.y_twin)(i));
        }
        out << "\n";
    }
}

}  // namespace riskquant
