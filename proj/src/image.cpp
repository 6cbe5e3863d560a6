#include <capl/errors.hpp>
#include <capl/image.hpp>

#include <cctype>
#include <fstream>

namespace capl
{

namespace
{

int read_header_int(std::istream &in, std::string const &path)
{
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#'))
  {
    if (c == '#')
    {
      std::string skip;
      std::getline(in, skip);
    }
    else
    {
      in.get();
    }
    c = in.peek();
  }
  int v = -1;
  if (!(in >> v) || v < 0)
    throw IoError("malformed PGM header in '" + path + "'");
  return v;
}

} // namespace

GrayImage read_pgm(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open image '" + path + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    throw IoError("'" + path + "' is not a binary PGM (P5)");

  GrayImage img;
  img.width = read_header_int(in, path);
  img.height = read_header_int(in, path);
  img.maxval = read_header_int(in, path);
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    throw IoError("unsupported PGM dimensions or maxval in '" + path + "'");
  in.get(); // single whitespace before the raster

  std::size_t const count = static_cast<std::size_t>(img.width) * img.height;
  std::size_t const bytes = img.maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(count * bytes);
  in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw IoError("truncated PGM raster in '" + path + "'");

  img.pixels.resize(count);
  for (std::size_t k = 0; k < count; ++k)
    img.pixels[k] = bytes == 1 ? raw[k] : static_cast<std::uint16_t>((raw[2 * k] << 8) | raw[2 * k + 1]);
  return img;
}

void write_pgm(std::string const &path, GrayImage const &img)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write image '" + path + "'");
  out << "P5\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  bool const wide = img.maxval > 255;
  for (std::uint16_t p : img.pixels)
  {
    if (wide)
      out.put(static_cast<char>(p >> 8));
    out.put(static_cast<char>(p & 0xff));
  }
  if (!out)
    throw IoError("failed writing image '" + path + "'");
}

} // namespace capl
