#include "dnsinj/report.hpp"

#include <sstream>

#include "dnsinj/resolver_sim.hpp"

namespace dnsinj::report {

using validation::Verdict;

const char* cell_symbol(Cell c) {
    switch (c) {
    case Cell::Pass: return "✓";
    case Cell::Fail: return "✗";
    case Cell::MisNotCached: return "(✗)⁵";
    case Cell::NA: return "-";
    }
    return "?";
}

Cell forward_cell(const payloads::PayloadEntry& entry,
                  const validation::DecodedOutcome& stub_outcome) {
    if (entry.expected_effect == payloads::Effect::CacheInject) {
        // Misinterpretation reached the consumer but no cache sat behind
        // the stub, so the injection itself did not land.
        if (stub_outcome.verdict == Verdict::Misinterpreted ||
            stub_outcome.verdict == Verdict::Truncated)
            return Cell::MisNotCached;
        return Cell::Fail;
    }
    return stub_outcome.verdict == Verdict::Rejected ? Cell::Fail : Cell::Pass;
}

Cell reverse_cell(const validation::DecodedOutcome& stub_outcome) {
    return stub_outcome.verdict == Verdict::Rejected ? Cell::Fail : Cell::Pass;
}

namespace {

std::vector<validation::DecoderProfile> matrix_profiles() {
    return {
        validation::profiles::glibc_like(),
        validation::profiles::musl_like(),
        validation::profiles::uclibc_like(),
        validation::profiles::escape_only(),
    };
}

validation::DecodedOutcome stub_outcome(const payloads::ZoneFile& zone,
                                        const validation::DecoderProfile& p,
                                        const std::string& payload_id) {
    sim::SimChainConfig cfg;
    cfg.recursive = sim::RecursiveProfile::Transparent;
    cfg.stub = p;
    auto stages = sim::run_forward_lookup(cfg, zone, payload_id);
    return stages.back().outcome;
}

} // namespace

Matrix stub_forward_matrix(const payloads::ZoneFile& zone) {
    Matrix m;
    m.columns = {"base", "slash", "at",  "xss", "sql", "ansi",
                 "injectdot_cname", "injectzero_cname"};
    for (const auto& p : matrix_profiles()) {
        MatrixRow row;
        row.label = p.name;
        for (const auto& id : m.columns)
            row.cells.push_back(
                forward_cell(*zone.find(id), stub_outcome(zone, p, id)));
        m.rows.push_back(std::move(row));
    }
    return m;
}

Matrix stub_reverse_matrix(const payloads::ZoneFile& zone) {
    Matrix m;
    for (int i = 1; i <= 8; ++i)
        m.columns.push_back("ptr_" + std::to_string(i));
    for (const auto& p : matrix_profiles()) {
        MatrixRow row;
        row.label = p.name;
        for (const auto& id : m.columns) {
            wire::RawName ptr = sim::payload_carried_name(*zone.find(id));
            row.cells.push_back(reverse_cell(validation::process_name(
                ptr, p, validation::LookupDirection::Reverse)));
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

namespace {

size_t display_width(const std::string& s) {
    // Good enough for ASCII plus the handful of symbols we emit.
    size_t w = 0;
    for (size_t i = 0; i < s.size();) {
        unsigned char c = s[i];
        i += c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        ++w;
    }
    return w;
}

} // namespace

std::string render_matrix(const Matrix& matrix) {
    size_t label_w = 0;
    for (const auto& row : matrix.rows)
        label_w = std::max(label_w, row.label.size());
    std::vector<size_t> col_w(matrix.columns.size());
    for (size_t c = 0; c < matrix.columns.size(); ++c) {
        col_w[c] = display_width(matrix.columns[c]);
        for (const auto& row : matrix.rows)
            col_w[c] = std::max(col_w[c],
                                display_width(cell_symbol(row.cells[c])));
    }

    std::ostringstream os;
    auto emit_cell = [&](const std::string& text, size_t width) {
        os << text;
        for (size_t i = display_width(text); i < width + 2; ++i)
            os << ' ';
    };
    emit_cell("", label_w);
    for (size_t c = 0; c < matrix.columns.size(); ++c)
        emit_cell(matrix.columns[c], col_w[c]);
    os << '\n';
    for (const auto& row : matrix.rows) {
        emit_cell(row.label, label_w);
        for (size_t c = 0; c < row.cells.size(); ++c)
            emit_cell(cell_symbol(row.cells[c]), col_w[c]);
        os << '\n';
    }
    return os.str();
}

std::string render_scan_matrix(const scanner::Report& report) {
    Matrix m;
    for (const auto& p : report.per_payload)
        m.columns.push_back(p.id);
    for (const auto& [target, verdicts] : report.matrix) {
        MatrixRow row;
        row.label = target;
        for (const auto& col : m.columns) {
            auto it = verdicts.find(col);
            if (it == verdicts.end()) {
                row.cells.push_back(Cell::NA);
                continue;
            }
            switch (it->second) {
            case scanner::ProbeVerdict::Transparent:
            case scanner::ProbeVerdict::CacheInjected:
                row.cells.push_back(Cell::Pass);
                break;
            case scanner::ProbeVerdict::Misinterpreted:
                row.cells.push_back(Cell::MisNotCached);
                break;
            case scanner::ProbeVerdict::Modified:
                row.cells.push_back(Cell::Fail);
                break;
            default:
                row.cells.push_back(Cell::NA);
            }
        }
        m.rows.push_back(std::move(row));
    }
    std::ostringstream os;
    os << render_matrix(m);
    os << "injected on " << report.any_injection_pct
       << "% of baseline-passing targets (" << report.targets_gated << "/"
       << report.targets_total << " gated)\n";
    return os.str();
}

} // namespace dnsinj::report
