#pragma once

#include "fracback/grid.hpp"

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace fracback::io {

/// Write-temp-then-rename file writer; nothing appears at `path` unless
/// commit() succeeds.
class AtomicFile {
public:
    explicit AtomicFile(std::string path);
    ~AtomicFile();
    std::ostream& stream() { return stream_; }
    void commit();

private:
    std::string path_;
    std::string temp_path_;
    std::ofstream stream_;
    bool committed_ = false;
};

/// Little-endian float64 block IO. The host is assumed little-endian (checked
/// once at startup of the writers).
void write_f64_le(std::ostream& os, const double* data, std::size_t count);
void read_f64_le(std::istream& is, double* data, std::size_t count);

/// Reads "key value" header lines up to "endheader", validating the magic
/// first line.
std::map<std::string, std::string> read_header(std::istream& is,
                                               const std::string& magic);
int header_int(const std::map<std::string, std::string>& header,
               const std::string& key);
double header_double(const std::map<std::string, std::string>& header,
                     const std::string& key);
std::string header_string(const std::map<std::string, std::string>& header,
                          const std::string& key);

/// Binary array file: plain-text header naming the grid and the shape of each
/// named block, then the blocks as little-endian float64 in order.
struct ArrayBlock {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;

    std::size_t element_count() const;
};

void write_array_file(const std::string& path, const Grid& grid,
                      const std::vector<ArrayBlock>& blocks);
struct ArrayFile {
    Grid grid;
    std::vector<ArrayBlock> blocks;

    const ArrayBlock& block(const std::string& name) const;
};
ArrayFile read_array_file(const std::string& path);

ArrayBlock field_to_block(const Field& f, const std::string& name);
Field block_to_field(const Grid& grid, const ArrayBlock& block);

/// RFC-4180-style CSV with a header row; values are quoted when they contain
/// commas, quotes, or newlines.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

std::string format_double(double v);

/// Field <-> CSV with coordinate columns (x[,y],u_1..u_K).
void write_field_csv(const std::string& path, const Field& f);
Field read_field_csv(const std::string& path, const Grid& grid, int components);

/// "key = value" manifest files.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);
std::map<std::string, std::string> read_manifest(const std::string& path);

} // namespace fracback::io
