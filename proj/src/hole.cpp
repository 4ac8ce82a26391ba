#include "openrate/hole.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace openrate {

HoleSpec HoleSpec::none() { return HoleSpec{}; }

HoleSpec HoleSpec::cylinders(int alphabet, int level, std::vector<std::string> words) {
  if (alphabet < 2) throw ConfigError("cylinder hole needs alphabet >= 2");
  if (level < 1) throw ConfigError("cylinder hole needs level >= 1");
  HoleSpec h;
  h.kind_ = HoleKind::cylinder_union;
  h.alphabet_ = alphabet;
  h.level_ = level;
  double width = std::pow(static_cast<double>(alphabet), -level);
  for (const auto& w : words) {
    if (static_cast<int>(w.size()) != level) {
      throw ConfigError("cylinder word '" + w + "' does not have length " + std::to_string(level));
    }
    std::vector<int> digits;
    double lo = 0.0;
    double scale = 1.0;
    for (char c : w) {
      const int d = c - '0';
      if (d < 0 || d >= alphabet) throw ConfigError("cylinder word '" + w + "' has digit out of range");
      digits.push_back(d);
      scale /= alphabet;
      lo += d * scale;
    }
    h.words_.push_back(std::move(digits));
    h.intervals_.push_back({lo, lo + width});
  }
  std::sort(h.intervals_.begin(), h.intervals_.end(),
            [](const OpenInterval& a, const OpenInterval& b) { return a.lo < b.lo; });
  return h;
}

HoleSpec HoleSpec::intervals(std::vector<OpenInterval> ivs) {
  HoleSpec h;
  for (const auto& iv : ivs) {
    if (!(iv.lo < iv.hi) || iv.lo < 0.0 || iv.hi > 1.0) {
      throw ConfigError("hole interval must satisfy 0 <= lo < hi <= 1");
    }
  }
  h.kind_ = ivs.empty() ? HoleKind::none : HoleKind::interval_union;
  std::sort(ivs.begin(), ivs.end(), [](const OpenInterval& a, const OpenInterval& b) { return a.lo < b.lo; });
  h.intervals_ = std::move(ivs);
  return h;
}

HoleSpec HoleSpec::disk(Point center, double radius) {
  if (!(radius > 0.0) || radius >= 0.5) throw ConfigError("disk hole radius must be in (0, 1/2)");
  HoleSpec h;
  h.kind_ = HoleKind::region_2d;
  h.center_ = center;
  h.radius_ = radius;
  return h;
}

HoleSpec HoleSpec::strip(double lo, double hi) {
  if (!(lo < hi) || lo < 0.0 || hi > 1.0) throw ConfigError("strip hole must satisfy 0 <= lo < hi <= 1");
  HoleSpec h;
  h.kind_ = HoleKind::region_2d;
  h.strip_ = true;
  h.intervals_.push_back({lo, hi});
  return h;
}

bool HoleSpec::contains(const Point& p) const {
  switch (kind_) {
    case HoleKind::none:
      return false;
    case HoleKind::cylinder_union:
    case HoleKind::interval_union:
      for (const auto& iv : intervals_) {
        if (p.x > iv.lo && p.x < iv.hi) return true;
      }
      return false;
    case HoleKind::region_2d:
      if (strip_) return p.x > intervals_[0].lo && p.x < intervals_[0].hi;
      return distance(Topology::torus, p, center_) < radius_;
  }
  return false;
}

double HoleSpec::boundary_distance(const Point& p, Topology topo) const {
  auto edge_dist = [&](double a, double b) {
    return topo == Topology::interval ? std::abs(a - b) : std::abs(circle_delta(a, b));
  };
  switch (kind_) {
    case HoleKind::none:
      return kInf;
    case HoleKind::cylinder_union:
    case HoleKind::interval_union: {
      // Endpoints shared by two adjacent intervals are interior to H.
      std::vector<double> ends;
      for (const auto& iv : intervals_) {
        ends.push_back(iv.lo);
        ends.push_back(iv.hi);
      }
      std::sort(ends.begin(), ends.end());
      double d = kInf;
      for (std::size_t i = 0; i < ends.size(); ++i) {
        const bool shared = (i > 0 && ends[i - 1] == ends[i]) || (i + 1 < ends.size() && ends[i + 1] == ends[i]);
        if (!shared) d = std::min(d, edge_dist(p.x, ends[i]));
      }
      return d;
    }
    case HoleKind::region_2d:
      if (strip_) {
        return std::min(edge_dist(p.x, intervals_[0].lo), edge_dist(p.x, intervals_[0].hi));
      }
      return std::abs(distance(Topology::torus, p, center_) - radius_);
  }
  return kInf;
}

std::vector<std::string> HoleSpec::word_strings() const {
  std::vector<std::string> out;
  for (const auto& w : words_) {
    std::string s;
    for (int d : w) s.push_back(static_cast<char>('0' + d));
    out.push_back(s);
  }
  return out;
}

std::string HoleSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case HoleKind::none:
      return "none";
    case HoleKind::cylinder_union: {
      os << "cylinders(m=" << alphabet_ << ",k=" << level_ << ":";
      for (const auto& w : word_strings()) os << ' ' << w;
      os << ')';
      return os.str();
    }
    case HoleKind::interval_union:
      os << "intervals(";
      for (const auto& iv : intervals_) os << '(' << iv.lo << ',' << iv.hi << ')';
      os << ')';
      return os.str();
    case HoleKind::region_2d:
      if (strip_) {
        os << "strip(" << intervals_[0].lo << ',' << intervals_[0].hi << ')';
      } else {
        os << "disk((" << center_.x << ',' << center_.y << ")," << radius_ << ')';
      }
      return os.str();
  }
  return "?";
}

bool HoleSpec::contains_hole(const HoleSpec& other) const {
  if (other.empty()) return true;
  if (empty()) return false;
  if (kind_ == HoleKind::region_2d && other.kind_ == HoleKind::region_2d && !strip_ && !other.strip_) {
    return distance(Topology::torus, center_, other.center_) + other.radius_ <= radius_ + 1e-15;
  }
  // Interval-type holes: every interval of `other` must sit inside one of ours.
  if (!other.intervals_.empty() && !intervals_.empty()) {
    for (const auto& o : other.intervals_) {
      bool inside = false;
      for (const auto& iv : intervals_) {
        if (o.lo >= iv.lo && o.hi <= iv.hi) inside = true;
      }
      // Adjacent cylinders merge into a longer interval.
      if (!inside) {
        double cursor = o.lo;
        for (const auto& iv : intervals_) {
          if (iv.lo <= cursor && iv.hi > cursor) cursor = iv.hi;
        }
        inside = cursor >= o.hi;
      }
      if (!inside) return false;
    }
    return true;
  }
  return false;
}

}  // namespace openrate
