#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qunet/qudit_core.hpp"

/// Text state files: a "dims: d1,d2,..." line followed by one "re im" line per
/// amplitude in flat-index order.  Several states may follow each other;
/// blank lines and lines starting with '#' are ignored.
namespace qunet {

std::string format_state(const StateVector& s);
/// States separated by a blank line, each optionally preceded by a "# ..." comment.
std::string format_states(std::span<const StateVector> states, std::span<const std::string> comments = {});
/// ParseError on malformed text; normalization rules as make_state.
std::vector<StateVector> parse_states(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace qunet
