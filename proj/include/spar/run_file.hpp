#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "spar/types.hpp"

namespace spar {

/// Retrieval output for a query set, keyed by query id.
using Run = std::map<std::string, RankedList>;

Run make_run(std::span<const RankedList> lists);

/// TREC run lines: "<query_id> Q0 <passage_id> <rank> <score> <tag>", rank
/// from 1, score with six decimals. Lists are written in the given order.
void write_trec_run(std::ostream& out, std::span<const RankedList> lists, std::string_view tag);
void save_trec_run(const std::filesystem::path& path, std::span<const RankedList> lists, std::string_view tag);

/// Entries are ordered by the rank column. Throws FormatError on malformed
/// lines or a repeated (query, passage) pair.
Run read_trec_run(std::istream& in);
Run load_trec_run(const std::filesystem::path& path);

}  // namespace spar
