#include "carca/data/catalog.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "carca/data/text_io.hpp"
#include "carca/error.hpp"

namespace carca::data {

ItemCatalog::ItemCatalog(numerics::Matrix attributes)
    : item_count_(attributes.rows()), attributes_(std::move(attributes)) {
  if (!attributes_.all_finite()) throw DataError("item attributes contain non-finite values");
}

ItemCatalog ItemCatalog::without_attributes(std::size_t item_count) {
  return ItemCatalog(numerics::Matrix(item_count, 0));
}

std::span<const double> ItemCatalog::attributes_of(ItemId item) const {
  if (!contains(item)) {
    throw ReferentialError("no attribute row for item " + std::to_string(item));
  }
  return attributes_.row(static_cast<std::size_t>(item - 1));
}

ItemCatalog load_attributes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attributes file " + path.string());
  const std::string file = path.string();

  std::map<std::int64_t, std::vector<double>> rows;
  std::size_t dim = 0;
  bool have_dim = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable_line(line)) continue;
    const auto fields = split(strip_cr(line), '\t');
    if (fields.size() != 2) {
      throw ParseError(file, line_no, "expected item_id<TAB>comma-separated values");
    }
    const auto item = parse_integer(fields[0]);
    if (!item || *item < 1 || *item > std::numeric_limits<ItemId>::max()) {
      throw ParseError(file, line_no, "bad item id '" + std::string(fields[0]) + "'");
    }
    std::vector<double> values;
    for (auto tok : split(fields[1], ',')) {
      const auto v = parse_real(tok);
      if (!v) throw ParseError(file, line_no, "bad attribute value '" + std::string(tok) + "'");
      values.push_back(*v);
    }
    if (!have_dim) {
      dim = values.size();
      have_dim = true;
    } else if (values.size() != dim) {
      throw ParseError(file, line_no, "expected " + std::to_string(dim) + " values, got " +
                                          std::to_string(values.size()));
    }
    if (!rows.emplace(*item, std::move(values)).second) {
      throw ParseError(file, line_no, "duplicate item id " + std::to_string(*item));
    }
  }

  const std::size_t count = rows.size();
  numerics::Matrix attrs(count, dim);
  std::int64_t expected = 1;
  for (const auto& [item, values] : rows) {
    if (item != expected) {
      throw ReferentialError(file + ": attribute row missing for item " + std::to_string(expected));
    }
    std::copy(values.begin(), values.end(), attrs.row(static_cast<std::size_t>(item - 1)).begin());
    ++expected;
  }
  return ItemCatalog(std::move(attrs));
}

void save_attributes(const std::filesystem::path& path, const ItemCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < catalog.item_count(); ++i) {
    out << (i + 1) << '\t';
    const auto row = catalog.attributes().row(i);
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

}  // namespace carca::data
