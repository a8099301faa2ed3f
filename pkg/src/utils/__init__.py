from src.utils.export import export_report, load_arc, load_arc_csv, load_arc_json
from src.utils.formatting import format_float, format_vector, jsonable, pretty_json
