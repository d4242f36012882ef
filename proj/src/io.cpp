#include "fracback/io.hpp"

#include "fracback/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <unistd.h>

static_assert(std::endian::native == std::endian::little,
              "array and checkpoint formats are little-endian");

namespace fracback::io {

AtomicFile::AtomicFile(std::string path) : path_(std::move(path)) {
    temp_path_ = path_ + ".tmp." + std::to_string(::getpid());
    stream_.open(temp_path_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw io_error("cannot open '" + temp_path_ + "' for writing");
}

AtomicFile::~AtomicFile() {
    if (!committed_) {
        stream_.close();
        std::error_code ec;
        std::filesystem::remove(temp_path_, ec);
    }
}

void AtomicFile::commit() {
    stream_.flush();
    if (!stream_) throw io_error("write failed for '" + temp_path_ + "'");
    stream_.close();
    std::error_code ec;
    std::filesystem::rename(temp_path_, path_, ec);
    if (ec) throw io_error("cannot rename '" + temp_path_ + "' to '" + path_ + "'");
    committed_ = true;
}

void write_f64_le(std::ostream& os, const double* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(count * sizeof(double)));
}

void read_f64_le(std::istream& is, double* data, std::size_t count) {
    is.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

std::map<std::string, std::string> read_header(std::istream& is,
                                               const std::string& magic) {
    std::string line;
    if (!std::getline(is, line) || line != magic) {
        throw io_error("bad file magic; expected '" + magic + "'");
    }
    std::map<std::string, std::string> header;
    while (std::getline(is, line)) {
        if (line == "endheader") return header;
        const auto space = line.find(' ');
        if (space == std::string::npos) {
            throw io_error("malformed header line '" + line + "'");
        }
        header[line.substr(0, space)] = line.substr(space + 1);
    }
    throw io_error("missing endheader");
}

namespace {
const std::string& header_value(const std::map<std::string, std::string>& h,
                                const std::string& key) {
    const auto it = h.find(key);
    if (it == h.end()) throw io_error("missing header key '" + key + "'");
    return it->second;
}
} // namespace

int header_int(const std::map<std::string, std::string>& h, const std::string& key) {
    return std::stoi(header_value(h, key));
}
double header_double(const std::map<std::string, std::string>& h,
                     const std::string& key) {
    return std::stod(header_value(h, key));
}
std::string header_string(const std::map<std::string, std::string>& h,
                          const std::string& key) {
    return header_value(h, key);
}

std::size_t ArrayBlock::element_count() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
}

void write_array_file(const std::string& path, const Grid& grid,
                      const std::vector<ArrayBlock>& blocks) {
    AtomicFile file(path);
    std::ostream& os = file.stream();
    os << "fracback-array 1\n";
    os << "dtype float64-le row-major\n";
    os << "grid " << grid.describe() << "\n";
    for (const auto& b : blocks) {
        os << "block " << b.name;
        for (int s : b.shape) os << " " << s;
        os << "\n";
        if (b.data.size() != b.element_count()) {
            throw io_error("array block '" + b.name + "' has inconsistent size");
        }
    }
    os << "endheader\n";
    for (const auto& b : blocks) write_f64_le(os, b.data.data(), b.data.size());
    file.commit();
}

ArrayFile read_array_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open array file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != "fracback-array 1") {
        throw io_error("'" + path + "' is not a fracback array file");
    }
    std::getline(is, line); // dtype line
    if (!std::getline(is, line) || line.rfind("grid ", 0) != 0) {
        throw io_error("'" + path + "': missing grid line");
    }
    std::istringstream grid_line(line.substr(5));
    std::string kind;
    grid_line >> kind;
    Grid grid = Grid::line(3);
    if (kind == "line") {
        int nx;
        grid_line >> nx;
        grid = Grid::line(nx);
    } else if (kind == "square") {
        int nx, ny;
        grid_line >> nx >> ny;
        grid = Grid::square(nx, ny);
    } else {
        throw io_error("'" + path + "': unknown grid kind '" + kind + "'");
    }

    ArrayFile out{grid, {}};
    while (std::getline(is, line) && line != "endheader") {
        if (line.rfind("block ", 0) != 0) {
            throw io_error("'" + path + "': malformed block line '" + line + "'");
        }
        std::istringstream bs(line.substr(6));
        ArrayBlock block;
        bs >> block.name;
        int dim;
        while (bs >> dim) block.shape.push_back(dim);
        out.blocks.push_back(std::move(block));
    }
    for (auto& b : out.blocks) {
        b.data.resize(b.element_count());
        read_f64_le(is, b.data.data(), b.data.size());
        if (!is) throw io_error("'" + path + "': truncated block '" + b.name + "'");
    }
    return out;
}

const ArrayBlock& ArrayFile::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw io_error("array file has no block '" + name + "'");
}

Field block_to_field(const Grid& grid, const ArrayBlock& block) {
    if (block.shape.empty()) throw io_error("array block has no shape");
    const int k = block.shape[0];
    Field f(grid, k);
    if (block.data.size() != static_cast<std::size_t>(f.size())) {
        throw io_error("array block '" + block.name + "' does not match the grid");
    }
    // blocks store component-major data (component k contiguous)
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < grid.interior_count(); ++i) {
            f.at(c, i) = block.data[static_cast<std::size_t>(c) * grid.interior_count() + i];
        }
    }
    return f;
}

ArrayBlock field_to_block(const Field& f, const std::string& name) {
    ArrayBlock block;
    block.name = name;
    block.shape = {f.components(), f.grid().interior_count()};
    block.data.assign(f.flat().data(), f.flat().data() + f.size());
    return block;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    AtomicFile file(path);
    std::ostream& os = file.stream();
    auto emit = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            const bool quote = c.find_first_of(",\"\n") != std::string::npos;
            if (i) os << ",";
            if (quote) {
                os << '"';
                for (char ch : c) {
                    if (ch == '"') os << '"';
                    os << ch;
                }
                os << '"';
            } else {
                os << c;
            }
        }
        os << "\r\n";
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    file.commit();
}

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open CSV '" + path + "'");
    std::string content((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
    CsvTable table;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool first_row = true;
    auto end_cell = [&]() {
        row.push_back(cell);
        cell.clear();
    };
    auto end_row = [&]() {
        end_cell();
        if (first_row) {
            table.header = row;
            first_row = false;
        } else {
            table.rows.push_back(row);
        }
        row.clear();
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char ch = content[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            end_cell();
        } else if (ch == '\n') {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            end_row();
        } else {
            cell += ch;
        }
    }
    if (!cell.empty() || !row.empty()) end_row();
    return table;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    throw io_error("CSV has no column '" + name + "'");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_field_csv(const std::string& path, const Field& f) {
    const Grid& g = f.grid();
    std::vector<std::string> header;
    header.push_back("x");
    if (g.dim() == 2) header.push_back("y");
    for (int k = 0; k < f.components(); ++k) {
        header.push_back("u" + std::to_string(k + 1));
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(g.interior_count());
    for (int i = 0; i < g.interior_count(); ++i) {
        std::vector<std::string> row;
        row.push_back(format_double(g.x(i)));
        if (g.dim() == 2) row.push_back(format_double(g.y(i)));
        for (int k = 0; k < f.components(); ++k) {
            row.push_back(format_double(f.at(k, i)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

Field read_field_csv(const std::string& path, const Grid& grid, int components) {
    const CsvTable table = read_csv(path);
    if (static_cast<int>(table.rows.size()) != grid.interior_count()) {
        throw io_error("'" + path + "': expected " +
                       std::to_string(grid.interior_count()) + " rows, found " +
                       std::to_string(table.rows.size()));
    }
    Field f(grid, components);
    std::vector<int> cols(components);
    for (int k = 0; k < components; ++k) {
        cols[k] = table.column("u" + std::to_string(k + 1));
    }
    for (int i = 0; i < grid.interior_count(); ++i) {
        for (int k = 0; k < components; ++k) {
            f.at(k, i) = std::stod(table.rows[i][cols[k]]);
        }
    }
    return f;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    AtomicFile file(path);
    for (const auto& [key, value] : entries) {
        file.stream() << key << " = " << value << "\n";
    }
    file.commit();
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open manifest '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

} // namespace fracback::io
