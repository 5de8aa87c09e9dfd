#pragma once

#include <cmath>
#include <vector>

#include "vort2d/common.hpp"

namespace vort2d {

/// Per-step QoI corrections ΔQ_i = Q_i(reference) - Q_i(predicted); in the
/// predictive phase the entries are surrogate samples instead.
struct DeltaQRecord {
    double t_days = 0.0;
    std::vector<double> dq;
};

/// Ordered ΔQ time series from a nudged training run. Records with
/// t ≤ burn_in_days are kept but excluded from fitting.
struct DeltaQDataset {
    int d = 0;
    double burn_in_days = 200.0;
    std::vector<DeltaQRecord> records;

    void append(DeltaQRecord rec) {
        if (int(rec.dq.size()) != d)
            throw ConfigError("DeltaQDataset: record dimension mismatch");
        if (!records.empty() && rec.t_days <= records.back().t_days)
            throw ConfigError("DeltaQDataset: time not strictly increasing");
        for (double v : rec.dq)
            if (!std::isfinite(v)) throw ConfigError("DeltaQDataset: non-finite correction");
        records.push_back(std::move(rec));
    }

    std::vector<std::size_t> fit_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].t_days > burn_in_days) idx.push_back(i);
        return idx;
    }
};

}  // namespace vort2d
