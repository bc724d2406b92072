#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sadam {

/// Shortest decimal form that round-trips to the same double ("nan"/"inf" for
/// non-finite values). Locale-independent, so CSV output is byte-stable.
std::string format_double(double v);

/// Comma-joins already formatted fields.
std::string csv_row(const std::vector<std::string>& fields);

/// First line of every emitted CSV: "# config_sha256=<hex>".
std::string hash_comment(std::string_view config_hash);

}  // namespace sadam
