"""The take-out assistant: expiry alerts, time-of-day tips, voice-less search.

The tracker folds remove events into per-item dwell times and hour-of-day
histograms, then lights LEDs when the door opens: red for items overdue for
removal, green for the usual suspects at this hour or search matches.
"""

from coldbench import FridgeHub, TakeoutTracker, led_overlay

DAY = 24 * 3_600_000
H = 3_600_000

hub = FridgeHub()
fid = hub.register_fridge()


def item(item_id, name, position, added_at, removed_at=None, state="complete"):
    return {"item_id": item_id, "name": name, "state": state, "position": position,
            "added_at": added_at, "removed_at": removed_at, "activity_id": 1}


# a week of history: milk gets consumed every ~2 days, coke every morning at 7
t = 0
seqs = 0
for day in range(6):
    morning = day * DAY + 7 * H + 600_000
    hub.publish(fid, {"kind": "add", "position": 0, "item": item(f"c{day}", "coke", 0, morning - 12 * H), "emitted_at": morning - 12 * H})
    hub.publish(fid, {"kind": "remove", "position": 0, "item": item(f"c{day}", "coke", 0, morning - 12 * H, morning, "removed"), "emitted_at": morning})
for k in range(3):
    added = k * 2 * DAY
    removed = added + 2 * DAY
    hub.publish(fid, {"kind": "add", "position": 1, "item": item(f"m{k}", "milk", 1, added), "emitted_at": added})
    hub.publish(fid, {"kind": "remove", "position": 1, "item": item(f"m{k}", "milk", 1, added, removed, "removed"), "emitted_at": removed})

tracker = TakeoutTracker().replay(hub.events(fid))
print("learned dwell times:")
for name, stats in tracker.dwell.items():
    print(f"  {name:6s} mean {stats.mean_s / 86400:.1f} days over {stats.count} removals")
print(f"coke removal hours: bucket 7 holds "
      f"{tracker.tod['coke'].share(7):.0%} of {tracker.tod['coke'].total} removals")

# current stock: a fresh coke and a milk that has been sitting for five days
now = 14 * DAY + 7 * H + 300_000  # day 14, 07:05
hub.publish(fid, {"kind": "add", "position": 0, "item": item("c9", "coke", 0, now - 2 * H), "emitted_at": now - 2 * H})
hub.publish(fid, {"kind": "add", "position": 1, "item": item("m9", "milk", 1, now - 5 * DAY), "emitted_at": now - 5 * DAY})
state = hub.get_state(fid)

alerts = tracker.expiry_alerts(state, now)
recs = tracker.door_open_recommendations(state, now)
print(f"\ndoor opens at 07:05 on day 14:")
print(f"  expiry alerts          -> {alerts}   (milk overdue: 5d > 1.5 x 2d)")
print(f"  take-out suggestions   -> {recs}   (coke at its usual hour)")
print(f"  LED overlay            -> {led_overlay([p for p, _ in alerts], [p for p, _ in recs])}")

hub.set_tags(fid, "milk", ["dairy", "pancakes"])
hub.set_tags(fid, "coke", ["drink"])
print(f"\nsearch 'pancakes' -> {tracker.search('pancakes', state, hub.get_tags(fid))}")
print(f"search 'drink'    -> {tracker.search('drink', state, hub.get_tags(fid))}")
