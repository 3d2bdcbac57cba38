#include "critique/time.hpp"

#include <cctype>
#include <cstdio>

namespace critique {

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  void skip() { ++pos_; }

  int digits(int count) {
    int value = 0;
    for (int i = 0; i < count; ++i) {
      if (done() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail();
      value = value * 10 + (text_[pos_++] - '0');
    }
    return value;
  }

  void expect(char c) {
    if (peek() != c) fail();
    ++pos_;
  }

  [[noreturn]] void fail() const {
    throw TimeFormatError("invalid ISO-8601 timestamp '" + std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

  Cursor cur(text);
  const int y = cur.digits(4);
  cur.expect('-');
  const int mo = cur.digits(2);
  cur.expect('-');
  const int d = cur.digits(2);

  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) cur.fail();

  int hh = 0, mm = 0, ss = 0;
  Duration offset{0};
  if (!cur.done()) {
    if (cur.peek() != 'T' && cur.peek() != ' ') cur.fail();
    cur.skip();
    hh = cur.digits(2);
    cur.expect(':');
    mm = cur.digits(2);
    if (cur.peek() == ':') {
      cur.skip();
      ss = cur.digits(2);
      if (cur.peek() == '.') {
        cur.skip();
        if (!std::isdigit(static_cast<unsigned char>(cur.peek()))) cur.fail();
        while (std::isdigit(static_cast<unsigned char>(cur.peek()))) cur.skip();
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) cur.fail();
    if (cur.peek() == 'Z') {
      cur.skip();
    } else if (cur.peek() == '+' || cur.peek() == '-') {
      const int sign = cur.peek() == '+' ? 1 : -1;
      cur.skip();
      const int oh = cur.digits(2);
      int om = 0;
      if (cur.peek() == ':') cur.skip();
      if (!cur.done()) om = cur.digits(2);
      offset = Duration{sign * (oh * 3600 + om * 60)};
    }
    if (!cur.done()) cur.fail();
  }

  const auto day_start = std::chrono::sys_days{ymd};
  return Timestamp{day_start} + Duration{hh * 3600 + mm * 60 + ss} - offset;
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const auto secs = (t - day).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

}  // namespace critique
