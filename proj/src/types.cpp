#include "spar/types.hpp"

#include <algorithm>

namespace spar {

std::vector<std::string> RankedList::ids() const
{
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.id);
    }
    return out;
}

RankedList select_top_k(std::string query_id, std::vector<ScoredPassage> candidates, std::size_t k)
{
    auto n = std::min(k, candidates.size());
    std::partial_sort(
        candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(), ranks_before);
    candidates.resize(n);
    return RankedList{std::move(query_id), std::move(candidates)};
}

}  // namespace spar
