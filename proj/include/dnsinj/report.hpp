#pragma once

#include <string>
#include <vector>

#include "dnsinj/payloads.hpp"
#include "dnsinj/scanner.hpp"
#include "dnsinj/validation.hpp"

namespace dnsinj::report {

/// Matrix cell semantics follow the survey tables: a check means the
/// payload was delivered (or the cache actually poisoned); a plain cross
/// means it was rejected or normalized away; a parenthesized cross means
/// the name was misinterpreted but nothing was cached.
enum class Cell { Pass, Fail, MisNotCached, NA };

const char* cell_symbol(Cell c);

/// Verdict of one stub decode mapped to a forward-lookup matrix cell.
Cell forward_cell(const payloads::PayloadEntry& entry,
                  const validation::DecodedOutcome& stub_outcome);

/// Reverse-suite mapping: delivered PTR names count as a check.
Cell reverse_cell(const validation::DecodedOutcome& stub_outcome);

struct MatrixRow {
    std::string label;
    std::vector<Cell> cells;
};

struct Matrix {
    std::vector<std::string> columns;
    std::vector<MatrixRow> rows;
};

/// Forward payload columns for each stub profile, computed through a
/// transparent chain. Columns: base, slash, at, xss, sql, ansi, and the two
/// CNAME injection payloads.
Matrix stub_forward_matrix(const payloads::ZoneFile& zone);

/// PTR payload columns (ptr_1..ptr_8) for each stub profile.
Matrix stub_reverse_matrix(const payloads::ZoneFile& zone);

std::string render_matrix(const Matrix& matrix);

/// Target-by-payload verdict table for a scan campaign, with a percentage
/// summary row.
std::string render_scan_matrix(const scanner::Report& report);

} // namespace dnsinj::report
