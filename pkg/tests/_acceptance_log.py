LINES = []


def record(number, title, ok, detail=""):
    line = f"CRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    LINES.append(line)
    print(line)
    return ok
