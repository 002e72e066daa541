// dsl.hpp
//
// Textual formats for domains (.pdom), instances (.pinst), plans (.pplan),
// counting programs (.crasp) and token streams. Parsers report positioned
// errors; serializers emit the canonical form the parsers round-trip.

#pragma once

#include <string>
#include <string_view>

#include "planlab/crasp.hpp"
#include "planlab/strips.hpp"

namespace planlab::dsl {

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

class ParseError : public Error {
 public:
  ParseError(SourceSpan span, const std::string& message,
             std::string expected = "")
      : Error("parse error at line " + std::to_string(span.line) + ":" +
              std::to_string(span.column) + ": " + message +
              (expected.empty() ? "" : " (expected " + expected + ")")),
        span(span),
        expected(std::move(expected)) {}

  SourceSpan span;
  std::string expected;
};

Domain parse_domain(std::string_view text);
std::string serialize_domain(const Domain& domain);

Instance parse_instance(std::string_view text,
                        std::shared_ptr<const Domain> domain);
std::string serialize_instance(const Instance& instance);

Plan parse_plan(std::string_view text, const Instance& instance);
std::string serialize_plan(const Instance& instance, const Plan& plan);

crasp::CraspProgram parse_crasp(std::string_view text);
std::string serialize_crasp(const crasp::CraspProgram& program);

// Whitespace-separated tokens: #<integer> is an extended token, anything else
// (bare or double-quoted) is a Sigma symbol. ';' starts a line comment.
crasp::TokenSeq parse_tokens(std::string_view text);
std::string serialize_tokens(const crasp::TokenSeq& tokens);

}  // namespace planlab::dsl
