#include "reference_table.hpp"

namespace deltaclass::testing {

namespace {

ReferenceTable build() {
  ReferenceTable f;
  f.classes = ClassSet({"B", "F", "N", "D", "R"});
  f.counts = {
      {9, 0, 0, 1, 1}, {1, 4, 0, 0, 0}, {0, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, {1, 7, 0, 0, 0},  {0, 0, 8, 0, 0},
      {0, 0, 4, 0, 0}, {1, 1, 1, 0, 0}, {1, 0, 0, 13, 1}, {2, 1, 0, 0, 3}, {0, 0, 0, 0, 1}, {2, 2, 0, 0, 2},
  };
  f.mapped = {"B", "F", "F", "F", "F", "N", "N", "N", "D", "R", "R", "R"};

  auto& c = f.clustering;
  c.k = f.counts.size();
  c.converged = true;
  c.iterations = 1;
  std::size_t next = 1;
  for (std::size_t j = 0; j < c.k; ++j) {
    std::map<std::string, std::size_t> tally;
    for (std::size_t i = 0; i < f.classes.size(); ++i) {
      for (std::size_t n = 0; n < f.counts[j][i]; ++n) {
        std::string id = (next < 10 ? "v0" : "v") + std::to_string(next++);
        c.ids.push_back(id);
        c.assignment.push_back(j);
        f.verif.push_back({id, f.classes.names()[i]});
      }
      if (f.counts[j][i]) tally[f.classes.names()[i]] = f.counts[j][i];
    }
    if (j == 3) {
      c.ids.push_back("x03");
      c.assignment.push_back(j);
    }
    c.centroids.push_back({1.0, double(j)});
    f.map.tally.push_back(tally);
    f.map.mapping[j] = f.mapped[j];
  }
  return f;
}

}  // namespace

const ReferenceTable& reference_table() {
  static const ReferenceTable f = build();
  return f;
}

}  // namespace deltaclass::testing
