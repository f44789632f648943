#pragma once

#include <string>
#include <vector>

#include "dssc/core.hpp"
#include "dssc/trace.hpp"

namespace dssc {

struct ColumnDivergence {
    std::string column;
    double sup = 0.0;
    double rms = 0.0;
    double t_at_sup = 0.0;
};

struct CompareReport {
    std::vector<ColumnDivergence> columns;
    double dt = 0.0;
    std::size_t rows = 0;
};

// Pointwise divergence between two runs on the same time grid. With no
// explicit column list, every column present in both traces is compared.
inline CompareReport compare_traces(const SimTrace& a, const SimTrace& b,
                                    std::vector<std::string> cols = {}) {
    require(a.rows() == b.rows() && std::abs(a.dt() - b.dt()) < 1e-15,
            "compare: traces must share the time grid");
    if (cols.empty()) {
        for (const auto& name : a.column_names())
            if (b.has_column(name)) cols.push_back(name);
    }
    CompareReport rep;
    rep.dt = a.dt();
    rep.rows = a.rows();
    for (const auto& name : cols) {
        require(a.has_column(name) && b.has_column(name),
                "compare: column '" + name + "' missing from one trace");
        const auto& ca = a.column(name);
        const auto& cb = b.column(name);
        ColumnDivergence d;
        d.column = name;
        double acc = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double diff = std::abs(ca[i] - cb[i]);
            if (diff > d.sup) {
                d.sup = diff;
                d.t_at_sup = a.time()[i];
            }
            acc += diff * diff;
        }
        d.rms = std::sqrt(acc / static_cast<double>(a.rows()));
        rep.columns.push_back(d);
    }
    return rep;
}

} // namespace dssc
