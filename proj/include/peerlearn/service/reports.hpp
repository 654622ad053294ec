#pragma once

#include <string>
#include <string_view>

#include "peerlearn/service/engine.hpp"

namespace peerlearn::service {

enum class Report { Students, Resources, Comments, KnowledgeUnits, Attempts };

std::string_view to_string(Report report);
Report parse_report(std::string_view name);

// Header line (without newline) for each report.
std::string_view report_header(Report report);

// Eligible for research use: consent currently given and never changed.
bool research_eligible(const UserRecord& user);

// UTF-8 CSV. With research_export, every row that names an ineligible user
// is dropped. Instructor only.
std::string export_report(const Engine& engine, UserId caller, OfferingId offering, Report report,
                          bool research_export);

// student_id,round1..roundR,overall_rating,rating_mark,ripple_total
std::string grades_csv(const Engine& engine, UserId caller, OfferingId offering);

// One RatingDelta per line, in attempt order.
std::string delta_ledger_ndjson(const Engine& engine, UserId caller, OfferingId offering);

std::string badge_feed_ndjson(const Engine& engine, UserId caller, OfferingId offering, UserId student);

}  // namespace peerlearn::service
